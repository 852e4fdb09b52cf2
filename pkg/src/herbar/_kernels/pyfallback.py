"""Pure numpy implementations of the hot kernels.

Byte-for-byte twin of the compiled extension (`_native`): every function here
must produce identical output for identical input, so backend selection never
changes engine results. Keep arithmetic expression order in sync with the
.pyx when editing either.
"""

import numpy as np

# 16-pixel Bresenham circle of radius 3, clockwise from 12 o'clock.
CIRCLE16 = (
    (0, -3), (1, -3), (2, -2), (3, -1),
    (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1),
    (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)

_POP8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

_STRIP_ROWS = 128


def fast_corners(img, threshold, margin):
    """Segment-test corners with run-sum scores.

    A pixel is a corner iff >= 9 contiguous circle pixels are all brighter
    than center+threshold or all darker than center-threshold. The score is
    the sum of |circle - center| over the qualifying run (two disjoint
    qualifying runs cannot coexist on 16 pixels). Returns (xs, ys, scores) as
    int32 arrays in raster order; pixels closer than max(margin, 3) to any
    border are excluded.
    """
    h, w = img.shape
    m = max(int(margin), 3)
    if w <= 2 * m or h <= 2 * m:
        e = np.empty(0, np.int32)
        return e, e.copy(), e.copy()

    src = img.astype(np.int16)
    xs_out, ys_out, sc_out = [], [], []
    for y0 in range(m, h - m, _STRIP_ROWS):
        y1 = min(y0 + _STRIP_ROWS, h - m)
        p = src[y0:y1, m:w - m]
        c16 = np.stack(
            [src[y0 + dy:y1 + dy, m + dx:w - m + dx] for dx, dy in CIRCLE16]
        )
        bright = c16 > p + threshold
        dark = c16 < p - threshold
        score = np.zeros(p.shape, np.int32)
        for flags, diff in ((bright, c16 - p), (dark, p - c16)):
            ext = np.concatenate([flags, flags[:8]]).astype(np.int16)
            cs = np.zeros((25,) + p.shape, np.int16)
            np.cumsum(ext, axis=0, out=cs[1:])
            win9 = (cs[9:25] - cs[0:16]) == 9
            member = np.zeros_like(flags)
            for s in range(16):
                ws = win9[s]
                for j in range(9):
                    member[(s + j) % 16] |= ws
            score = np.maximum(
                score, (member * diff).sum(axis=0, dtype=np.int32)
            )
        ys, xs = np.nonzero(score > 0)
        xs_out.append((xs + m).astype(np.int32))
        ys_out.append((ys + y0).astype(np.int32))
        sc_out.append(score[ys, xs])
    return (
        np.concatenate(xs_out),
        np.concatenate(ys_out),
        np.concatenate(sc_out),
    )


def disc_moments(img, xs, ys, dxs, dys):
    """First-order patch moments m10 = sum(dx*I), m01 = sum(dy*I) over the
    given disc offsets, per keypoint. Exact integer sums."""
    patch = img[
        ys[:, None] + dys[None, :], xs[:, None] + dxs[None, :]
    ].astype(np.int64)
    m10 = (patch * dxs[None, :]).sum(axis=1)
    m01 = (patch * dys[None, :]).sum(axis=1)
    return m10, m01


def _round_half_away(v):
    return np.where(v >= 0.0, np.floor(v + 0.5), np.ceil(v - 0.5))


def steered_descriptors(img, xs, ys, coss, sins, pattern):
    """256-bit binary descriptors; sampling offsets rotated per keypoint.

    pattern is int32 (256, 4) rows (ax, ay, bx, by); bit k is set iff
    I(p + a'_k) < I(p + b'_k). Bits packed LSB-first into 32 bytes.
    Callers guarantee every rotated offset stays in bounds (19 px margin).
    """
    c = coss[:, None]
    s = sins[:, None]
    ax, ay, bx, by = (pattern[:, i].astype(np.float64)[None, :] for i in range(4))
    axr = _round_half_away(ax * c - ay * s).astype(np.int32)
    ayr = _round_half_away(ax * s + ay * c).astype(np.int32)
    bxr = _round_half_away(bx * c - by * s).astype(np.int32)
    byr = _round_half_away(bx * s + by * c).astype(np.int32)
    x = xs[:, None]
    y = ys[:, None]
    bits = img[y + ayr, x + axr] < img[y + byr, x + bxr]
    return np.packbits(bits, axis=1, bitorder="little")


def hamming_matrix(a, b):
    """All-pairs Hamming distances between uint8 (n, 32) descriptor arrays."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)), np.int32)
    x = a[:, None, :] ^ b[None, :, :]
    return _POP8[x].sum(axis=2, dtype=np.int32)


def warp_bilinear(img, hinv, out_w, out_h, fill):
    """Inverse-map warp with bilinear sampling; out-of-bounds -> fill."""
    h, w = img.shape
    xd, yd = np.meshgrid(
        np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64)
    )
    denom = hinv[2, 0] * xd + hinv[2, 1] * yd + hinv[2, 2]
    ok = np.abs(denom) > 1e-12
    denom = np.where(ok, denom, 1.0)
    sx = (hinv[0, 0] * xd + hinv[0, 1] * yd + hinv[0, 2]) / denom
    sy = (hinv[1, 0] * xd + hinv[1, 1] * yd + hinv[1, 2]) / denom
    inb = ok & (sx >= 0.0) & (sx <= w - 1.0) & (sy >= 0.0) & (sy <= h - 1.0)
    sx = np.where(inb, sx, 0.0)
    sy = np.where(inb, sy, 0.0)
    x0 = np.minimum(np.floor(sx), w - 2.0).astype(np.int64)
    y0 = np.minimum(np.floor(sy), h - 2.0).astype(np.int64)
    fx = sx - x0
    fy = sy - y0
    p00 = img[y0, x0].astype(np.float64)
    p01 = img[y0, x0 + 1].astype(np.float64)
    p10 = img[y0 + 1, x0].astype(np.float64)
    p11 = img[y0 + 1, x0 + 1].astype(np.float64)
    vtop = (1.0 - fx) * p00 + fx * p01
    vbot = (1.0 - fx) * p10 + fx * p11
    val = (1.0 - fy) * vtop + fy * vbot
    out = np.where(inb, np.floor(val + 0.5), float(fill))
    return out.astype(np.uint8)


def box_downsample(img, out_w, out_h):
    """Area-average downsample; destination footprints tile the source.

    Footprint of destination row i is source rows [floor(i*H/out_h),
    floor((i+1)*H/out_h)), likewise for columns; the average rounds half up.
    Requires out dims <= source dims.
    """
    h, w = img.shape
    by = (np.arange(out_h + 1, dtype=np.int64) * h) // out_h
    bx = (np.arange(out_w + 1, dtype=np.int64) * w) // out_w
    rows = np.add.reduceat(img.astype(np.int64), by[:-1], axis=0)
    sums = np.add.reduceat(rows, bx[:-1], axis=1)
    cnt = np.diff(by)[:, None] * np.diff(bx)[None, :]
    return ((2 * sums + cnt) // (2 * cnt)).astype(np.uint8)
