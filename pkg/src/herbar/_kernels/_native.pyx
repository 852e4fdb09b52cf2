# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of pyfallback. Must stay byte-identical to it; expression
order in the float paths is deliberate (and FMA contraction is disabled in
setup.py) so both backends round the same way."""

import numpy as np

from libc.math cimport ceil, floor

cdef int[16] CX = [0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1]
cdef int[16] CY = [-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3]

cdef unsigned char[256] POP8

cdef _init_pop8():
    cdef int i, v, c
    for i in range(256):
        v = i
        c = 0
        while v:
            c += v & 1
            v >>= 1
        POP8[i] = c

_init_pop8()


cdef inline int _segment_score(const unsigned char[:, ::1] img, int x, int y,
                               int threshold) nogil:
    """Score of the qualifying contiguous run (>= 9 bright or dark circle
    pixels), 0 if the pixel is not a corner."""
    cdef int p = img[y, x]
    cdef int lo = p - threshold
    cdef int hi = p + threshold
    cdef int i, v, nb, nd, start, length, run_sum, best, j, idx
    cdef int[16] cval
    cdef unsigned char[16] bright, dark

    # A run of >= 9 covers at least 2 of the 4 compass pixels.
    nb = 0
    nd = 0
    for i in range(0, 16, 4):
        v = img[y + CY[i], x + CX[i]]
        if v > hi:
            nb += 1
        elif v < lo:
            nd += 1
    if nb < 2 and nd < 2:
        return 0

    nb = 0
    nd = 0
    for i in range(16):
        v = img[y + CY[i], x + CX[i]]
        cval[i] = v
        bright[i] = v > hi
        dark[i] = v < lo
        nb += bright[i]
        nd += dark[i]

    best = 0
    if nb == 16:
        run_sum = 0
        for i in range(16):
            run_sum += cval[i] - p
        best = run_sum
    elif nb >= 9:
        for start in range(16):
            if bright[start] and not bright[(start + 15) % 16]:
                length = 0
                run_sum = 0
                for j in range(16):
                    idx = (start + j) % 16
                    if not bright[idx]:
                        break
                    length += 1
                    run_sum += cval[idx] - p
                if length >= 9 and run_sum > best:
                    best = run_sum
    if nd == 16:
        run_sum = 0
        for i in range(16):
            run_sum += p - cval[i]
        if run_sum > best:
            best = run_sum
    elif nd >= 9:
        for start in range(16):
            if dark[start] and not dark[(start + 15) % 16]:
                length = 0
                run_sum = 0
                for j in range(16):
                    idx = (start + j) % 16
                    if not dark[idx]:
                        break
                    length += 1
                    run_sum += p - cval[idx]
                if length >= 9 and run_sum > best:
                    best = run_sum
    return best


def fast_corners(const unsigned char[:, ::1] img, int threshold, int margin):
    cdef int h = img.shape[0]
    cdef int w = img.shape[1]
    cdef int m = margin if margin > 3 else 3
    if w <= 2 * m or h <= 2 * m:
        e = np.empty(0, np.int32)
        return e, e.copy(), e.copy()

    out_x = np.empty(<long> (h - 2 * m) * (w - 2 * m), np.int32)
    out_y = np.empty_like(out_x)
    out_s = np.empty_like(out_x)
    cdef int[::1] vx = out_x
    cdef int[::1] vy = out_y
    cdef int[::1] vs = out_s
    cdef int x, y, sc, n = 0
    for y in range(m, h - m):
        for x in range(m, w - m):
            sc = _segment_score(img, x, y, threshold)
            if sc > 0:
                vx[n] = x
                vy[n] = y
                vs[n] = sc
                n += 1
    return out_x[:n].copy(), out_y[:n].copy(), out_s[:n].copy()


def disc_moments(const unsigned char[:, ::1] img,
                 const int[::1] xs, const int[::1] ys,
                 const int[::1] dxs, const int[::1] dys):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t k = dxs.shape[0]
    m10 = np.zeros(n, np.int64)
    m01 = np.zeros(n, np.int64)
    cdef long long[::1] v10 = m10
    cdef long long[::1] v01 = m01
    cdef Py_ssize_t i, j
    cdef long long a10, a01
    cdef int px
    for i in range(n):
        a10 = 0
        a01 = 0
        for j in range(k):
            px = img[ys[i] + dys[j], xs[i] + dxs[j]]
            a10 += dxs[j] * px
            a01 += dys[j] * px
        v10[i] = a10
        v01[i] = a01
    return m10, m01


cdef inline int _round_half_away(double v) nogil:
    if v >= 0.0:
        return <int> floor(v + 0.5)
    return <int> ceil(v - 0.5)


def steered_descriptors(const unsigned char[:, ::1] img,
                        const int[::1] xs, const int[::1] ys,
                        const double[::1] coss, const double[::1] sins,
                        const int[:, ::1] pattern):
    cdef Py_ssize_t n = xs.shape[0]
    out = np.zeros((n, 32), np.uint8)
    cdef unsigned char[:, ::1] vout = out
    cdef Py_ssize_t i, k
    cdef double c, s, ax, ay, bx, by
    cdef int axr, ayr, bxr, byr, x, y
    cdef unsigned char pa, pb
    for i in range(n):
        c = coss[i]
        s = sins[i]
        x = xs[i]
        y = ys[i]
        for k in range(256):
            ax = pattern[k, 0]
            ay = pattern[k, 1]
            bx = pattern[k, 2]
            by = pattern[k, 3]
            axr = _round_half_away(ax * c - ay * s)
            ayr = _round_half_away(ax * s + ay * c)
            bxr = _round_half_away(bx * c - by * s)
            byr = _round_half_away(bx * s + by * c)
            pa = img[y + ayr, x + axr]
            pb = img[y + byr, x + bxr]
            if pa < pb:
                vout[i, k >> 3] |= <unsigned char> (1 << (k & 7))
    return out


def hamming_matrix(const unsigned char[:, ::1] a, const unsigned char[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    out = np.zeros((n, m), np.int32)
    if n == 0 or m == 0:
        return out
    cdef int[:, ::1] vout = out
    cdef Py_ssize_t i, j, k
    cdef int d
    for i in range(n):
        for j in range(m):
            d = 0
            for k in range(32):
                d += POP8[a[i, k] ^ b[j, k]]
            vout[i, j] = d
    return out


def warp_bilinear(const unsigned char[:, ::1] img, const double[:, ::1] hinv,
                  int out_w, int out_h, int fill):
    cdef int h = img.shape[0]
    cdef int w = img.shape[1]
    out = np.empty((out_h, out_w), np.uint8)
    cdef unsigned char[:, ::1] vout = out
    cdef int xd, yd
    cdef long x0, y0
    cdef double fxd, fyd, denom, sx, sy, fx, fy, fx0, fy0
    cdef double p00, p01, p10, p11, vtop, vbot, val
    cdef double h00 = hinv[0, 0], h01 = hinv[0, 1], h02 = hinv[0, 2]
    cdef double h10 = hinv[1, 0], h11 = hinv[1, 1], h12 = hinv[1, 2]
    cdef double h20 = hinv[2, 0], h21 = hinv[2, 1], h22 = hinv[2, 2]
    cdef unsigned char cfill = <unsigned char> fill
    for yd in range(out_h):
        fyd = yd
        for xd in range(out_w):
            fxd = xd
            denom = h20 * fxd + h21 * fyd + h22
            if denom <= 1e-12 and denom >= -1e-12:
                vout[yd, xd] = cfill
                continue
            sx = (h00 * fxd + h01 * fyd + h02) / denom
            sy = (h10 * fxd + h11 * fyd + h12) / denom
            if sx < 0.0 or sx > w - 1.0 or sy < 0.0 or sy > h - 1.0:
                vout[yd, xd] = cfill
                continue
            fx0 = floor(sx)
            if fx0 > w - 2.0:
                fx0 = w - 2.0
            fy0 = floor(sy)
            if fy0 > h - 2.0:
                fy0 = h - 2.0
            x0 = <long> fx0
            y0 = <long> fy0
            fx = sx - fx0
            fy = sy - fy0
            p00 = img[y0, x0]
            p01 = img[y0, x0 + 1]
            p10 = img[y0 + 1, x0]
            p11 = img[y0 + 1, x0 + 1]
            vtop = (1.0 - fx) * p00 + fx * p01
            vbot = (1.0 - fx) * p10 + fx * p11
            val = (1.0 - fy) * vtop + fy * vbot
            vout[yd, xd] = <unsigned char> floor(val + 0.5)
    return out


def box_downsample(const unsigned char[:, ::1] img, int out_w, int out_h):
    cdef int h = img.shape[0]
    cdef int w = img.shape[1]
    out = np.empty((out_h, out_w), np.uint8)
    cdef unsigned char[:, ::1] vout = out
    cdef int i, j, sy, sx, sy0, sy1, sx0, sx1
    cdef long long acc, cnt
    for i in range(out_h):
        sy0 = (i * h) // out_h
        sy1 = ((i + 1) * h) // out_h
        for j in range(out_w):
            sx0 = (j * w) // out_w
            sx1 = ((j + 1) * w) // out_w
            acc = 0
            for sy in range(sy0, sy1):
                for sx in range(sx0, sx1):
                    acc += img[sy, sx]
            cnt = <long long> (sy1 - sy0) * (sx1 - sx0)
            vout[i, j] = <unsigned char> ((2 * acc + cnt) // (2 * cnt))
    return out
