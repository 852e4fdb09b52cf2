"""Descriptor matching, robust homography estimation, and recognition.

Similarity is defined geometrically: ratio-tested Hamming matches feed a
RANSAC homography search, and a target is recognized when enough matches
agree with one planar mapping. Tie-breaking is total (lowest index / first
found) so runs agree across implementations.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from herbar import _kernels
from herbar.errors import DegenerateConfiguration
from herbar.features import FeatureSet
from herbar.rng import XorShift64Star

DEFAULT_RATIO = 0.8
DEFAULT_MAX_DIST = 64
DEFAULT_RANSAC_ITERS = 500
DEFAULT_INLIER_PX = 3.0
DEFAULT_MIN_INLIERS = 12
DEFAULT_MIN_CONFIDENCE = 0.25
DEFAULT_SEED = 42


@dataclass(frozen=True)
class Match:
    query_idx: int
    target_idx: int
    distance: int


@dataclass(frozen=True)
class Detection:
    target_id: int
    homography: np.ndarray  # 3x3, target-image coords -> frame coords, h33=1
    inliers: int
    matched: int

    @property
    def confidence(self) -> float:
        return self.inliers / self.matched if self.matched else 0.0


@dataclass(frozen=True)
class RecognizeParams:
    ratio: float = DEFAULT_RATIO
    max_dist: int = DEFAULT_MAX_DIST
    ransac_iters: int = DEFAULT_RANSAC_ITERS
    inlier_px: float = DEFAULT_INLIER_PX
    min_inliers: int = DEFAULT_MIN_INLIERS
    min_confidence: float = DEFAULT_MIN_CONFIDENCE
    seed: int = DEFAULT_SEED


def match_descriptors(query: FeatureSet, target: FeatureSet,
                      ratio: float = DEFAULT_RATIO,
                      max_dist: int = DEFAULT_MAX_DIST) -> list[Match]:
    """Ratio-tested nearest-neighbour matches, one-to-one by target index.

    For each query descriptor the nearest and second-nearest target
    descriptors are found by Hamming distance (nearest ties break to the
    lower target index); the match is kept iff d1 < ratio*d2 and
    d1 <= max_dist. Per target index only the smallest-d1 match survives
    (ties: lower query index). Output is ordered by query index.
    """
    nq, nt = len(query), len(target)
    if nq == 0 or nt == 0:
        return []
    d = _kernels.hamming_matrix(query.descriptors, target.descriptors)
    nearest = d.argmin(axis=1)
    rows = np.arange(nq)
    d1 = d[rows, nearest].astype(np.float64)
    if nt == 1:
        d2 = np.full(nq, np.inf)
    else:
        masked = d.astype(np.float64)
        masked[rows, nearest] = np.inf
        d2 = masked.min(axis=1)
    keep = (d1 <= max_dist) & (d1 < ratio * d2)

    best_for_target: dict[int, Match] = {}
    for q in range(nq):
        if not keep[q]:
            continue
        t = int(nearest[q])
        m = Match(q, t, int(d1[q]))
        prev = best_for_target.get(t)
        if prev is None or m.distance < prev.distance:
            best_for_target[t] = m
    return sorted(best_for_target.values(), key=lambda m: m.query_idx)


def _normalize_points(pts):
    c = pts.mean(axis=0)
    dist = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    if dist <= 1e-12:
        raise DegenerateConfiguration("coincident points")
    s = math.sqrt(2.0) / dist
    return (pts - c) * s, s, c


def _any_three_collinear(pts, tol=1e-9):
    for i, j, k in combinations(range(len(pts)), 3):
        v1 = pts[j] - pts[i]
        v2 = pts[k] - pts[i]
        if abs(v1[0] * v2[1] - v1[1] * v2[0]) <= tol:
            return True
    return False


def estimate_homography_dlt(src_pts, dst_pts) -> np.ndarray:
    """Normalized DLT: the algebraic least-squares homography mapping
    src_pts to dst_pts, scaled so h33 = 1."""
    src = np.asarray(src_pts, np.float64).reshape(-1, 2)
    dst = np.asarray(dst_pts, np.float64).reshape(-1, 2)
    n = len(src)
    if n < 4 or len(dst) != n:
        raise ValueError("need >= 4 point pairs of equal count")
    sn, s_src, c_src = _normalize_points(src)
    dn, s_dst, c_dst = _normalize_points(dst)
    if n == 4 and (_any_three_collinear(sn) or _any_three_collinear(dn)):
        raise DegenerateConfiguration("3 of 4 points collinear")

    a = np.zeros((2 * n, 9))
    x, y = sn[:, 0], sn[:, 1]
    u, v = dn[:, 0], dn[:, 1]
    a[0::2, 0] = x
    a[0::2, 1] = y
    a[0::2, 2] = 1.0
    a[0::2, 6] = -u * x
    a[0::2, 7] = -u * y
    a[0::2, 8] = -u
    a[1::2, 3] = x
    a[1::2, 4] = y
    a[1::2, 5] = 1.0
    a[1::2, 6] = -v * x
    a[1::2, 7] = -v * y
    a[1::2, 8] = -v
    _, sv, vt = np.linalg.svd(a)
    # Rank < 8 or a 2-dimensional null space both mean the solution is not
    # unique (collinear / coincident configurations).
    if sv[7] <= 1e-12 * sv[0]:
        raise DegenerateConfiguration("rank-deficient system")
    if len(sv) >= 9 and sv[8] / sv[7] > 0.99:
        raise DegenerateConfiguration("ambiguous null space")
    hn = vt[-1].reshape(3, 3)
    h = _denormalize(hn, s_src, c_src, s_dst, c_dst)
    if abs(h[2, 2]) <= 1e-12:
        raise DegenerateConfiguration("h33 vanishes")
    return h / h[2, 2]


def _denormalize(hn, s_src, c_src, s_dst, c_dst):
    """T_dst^-1 @ Hn @ T_src with the T inverses written analytically, so
    the per-hypothesis batch path below reproduces identical floats."""
    tdi = np.array([
        [1.0 / s_dst, 0.0, c_dst[0]],
        [0.0, 1.0 / s_dst, c_dst[1]],
        [0.0, 0.0, 1.0],
    ])
    ts = np.array([
        [s_src, 0.0, -s_src * c_src[0]],
        [0.0, s_src, -s_src * c_src[1]],
        [0.0, 0.0, 1.0],
    ])
    return tdi @ hn @ ts


def project_homography(h, pts) -> np.ndarray:
    """Apply a homography to (n, 2) points; points mapped to infinity come
    back as +inf coordinates."""
    p = np.asarray(pts, np.float64).reshape(-1, 2)
    w = h[2, 0] * p[:, 0] + h[2, 1] * p[:, 1] + h[2, 2]
    bad = np.abs(w) <= 1e-12
    w = np.where(bad, 1.0, w)
    u = (h[0, 0] * p[:, 0] + h[0, 1] * p[:, 1] + h[0, 2]) / w
    v = (h[1, 0] * p[:, 0] + h[1, 1] * p[:, 1] + h[1, 2]) / w
    u = np.where(bad, np.inf, u)
    v = np.where(bad, np.inf, v)
    return np.column_stack([u, v])


def _fit_minimal_batch(src4, dst4):
    """DLT on a stack of minimal samples: (k, 4, 2) pairs -> (h (k, 3, 3),
    valid (k,)). Arithmetic matches estimate_homography_dlt slice for slice;
    degenerate samples come back with valid=False instead of raising."""
    k = len(src4)

    def normalize(p):
        c = p.mean(axis=1)
        diff = p - c[:, None, :]
        dist = np.sqrt((diff**2).sum(axis=2)).mean(axis=1)
        ok = dist > 1e-12
        s = math.sqrt(2.0) / np.where(ok, dist, 1.0)
        return diff * s[:, None, None], s, c, ok

    sn, s_s, c_s, ok_s = normalize(src4)
    dn, s_d, c_d, ok_d = normalize(dst4)
    valid = ok_s & ok_d
    for pts in (sn, dn):
        for i, j, kk in combinations(range(4), 3):
            v1 = pts[:, j] - pts[:, i]
            v2 = pts[:, kk] - pts[:, i]
            cross = v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]
            valid &= np.abs(cross) > 1e-9

    a = np.zeros((k, 8, 9))
    x, y = sn[:, :, 0], sn[:, :, 1]
    u, v = dn[:, :, 0], dn[:, :, 1]
    a[:, 0::2, 0] = x
    a[:, 0::2, 1] = y
    a[:, 0::2, 2] = 1.0
    a[:, 0::2, 6] = -u * x
    a[:, 0::2, 7] = -u * y
    a[:, 0::2, 8] = -u
    a[:, 1::2, 3] = x
    a[:, 1::2, 4] = y
    a[:, 1::2, 5] = 1.0
    a[:, 1::2, 6] = -v * x
    a[:, 1::2, 7] = -v * y
    a[:, 1::2, 8] = -v
    try:
        _, sv, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError:
        # Batched SVD aborts wholesale if one slice fails; redo slice-wise
        # and drop only the offenders.
        sv = np.zeros((k, 8))
        vt = np.zeros((k, 9, 9))
        for i in range(k):
            try:
                _, sv[i], vt[i] = np.linalg.svd(a[i])
            except np.linalg.LinAlgError:
                valid[i] = False
    valid &= sv[:, 7] > 1e-12 * sv[:, 0]
    hn = vt[:, -1, :].reshape(k, 3, 3)

    tdi = np.zeros((k, 3, 3))
    tdi[:, 0, 0] = 1.0 / s_d
    tdi[:, 1, 1] = 1.0 / s_d
    tdi[:, 0, 2] = c_d[:, 0]
    tdi[:, 1, 2] = c_d[:, 1]
    tdi[:, 2, 2] = 1.0
    ts = np.zeros((k, 3, 3))
    ts[:, 0, 0] = s_s
    ts[:, 1, 1] = s_s
    ts[:, 0, 2] = -s_s * c_s[:, 0]
    ts[:, 1, 2] = -s_s * c_s[:, 1]
    ts[:, 2, 2] = 1.0
    h = tdi @ hn @ ts
    h33 = h[:, 2, 2]
    valid &= np.abs(h33) > 1e-12
    h = h / np.where(valid, h33, 1.0)[:, None, None]
    return h, valid


_HYPOTHESIS_CHUNK = 100


def ransac_homography(src_pts, dst_pts, iters: int = DEFAULT_RANSAC_ITERS,
                      inlier_px: float = DEFAULT_INLIER_PX,
                      seed: int = DEFAULT_SEED):
    """Consensus homography fit. Returns (H, inlier_mask) or None.

    When C(n, 4) <= iters every minimal 4-subset is tried in lexicographic
    order (small instances are solved exactly); otherwise `iters` subsets are
    drawn from the seeded xorshift64* stream. The best model is the one with
    most inliers (first found wins ties); the returned H is re-fit on that
    model's inliers and the mask is the best minimal model's inlier set.
    Hypotheses are evaluated in chunks for speed; chunking preserves the
    subset order and therefore the tie-breaking.
    """
    src = np.asarray(src_pts, np.float64).reshape(-1, 2)
    dst = np.asarray(dst_pts, np.float64).reshape(-1, 2)
    n = len(src)
    if n < 4 or len(dst) != n:
        return None
    thr2 = float(inlier_px) ** 2

    if math.comb(n, 4) <= iters:
        subsets = np.array(list(combinations(range(n), 4)), np.intp)
    else:
        rng = XorShift64Star(seed)
        subsets = np.array(
            [rng.sample_distinct(4, n) for _ in range(iters)], np.intp
        )

    sx = src[:, 0]
    sy = src[:, 1]
    best_count = 0
    best_mask = None
    best_h = None
    for lo in range(0, len(subsets), _HYPOTHESIS_CHUNK):
        chunk = subsets[lo:lo + _HYPOTHESIS_CHUNK]
        h, valid = _fit_minimal_batch(src[chunk], dst[chunk])
        w = h[:, 2, 0, None] * sx + h[:, 2, 1, None] * sy + h[:, 2, 2, None]
        wbad = np.abs(w) <= 1e-12
        w = np.where(wbad, 1.0, w)
        du = (h[:, 0, 0, None] * sx + h[:, 0, 1, None] * sy
              + h[:, 0, 2, None]) / w - dst[:, 0]
        dv = (h[:, 1, 0, None] * sx + h[:, 1, 1, None] * sy
              + h[:, 1, 2, None]) / w - dst[:, 1]
        err = du**2 + dv**2
        err = np.where(wbad | ~np.isfinite(err), np.inf, err)
        inlier = err <= thr2
        counts = np.where(valid, inlier.sum(axis=1), -1)
        ci = int(np.argmax(counts))
        if counts[ci] > best_count:
            best_count = int(counts[ci])
            best_mask = inlier[ci]
            best_h = h[ci]
            if best_count == n:
                break
    if best_count < 4:
        return None
    try:
        refit = estimate_homography_dlt(src[best_mask], dst[best_mask])
    except DegenerateConfiguration:
        refit = best_h
    return refit, best_mask


def recognize(frame_features: FeatureSet, db,
              params: RecognizeParams = RecognizeParams()):
    """Best geometrically-verified target for a frame, or None.

    Every target is matched and RANSAC-verified independently; a candidate
    needs inliers >= min_inliers and inliers/matched >= min_confidence. The
    most-inlier candidate wins; ties go to the lower target id.
    """
    best = None
    for target in db.targets:
        matches = match_descriptors(
            frame_features, target.features, params.ratio, params.max_dist
        )
        if len(matches) < 4:
            continue
        tpts = target.features.points()
        fpts = frame_features.points()
        src = tpts[[m.target_idx for m in matches]]
        dst = fpts[[m.query_idx for m in matches]]
        result = ransac_homography(
            src, dst, params.ransac_iters, params.inlier_px, params.seed
        )
        if result is None:
            continue
        h, mask = result
        det = Detection(target.id, h, int(mask.sum()), len(matches))
        if det.inliers < params.min_inliers:
            continue
        if det.confidence < params.min_confidence:
            continue
        if best is None or det.inliers > best.inliers:
            best = det
    return best
