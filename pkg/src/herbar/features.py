"""Oriented multi-scale corner detection and 256-bit binary descriptors.

The detector is a FAST-9 segment test with run-sum scores; orientation comes
from the intensity centroid of a radius-15 disc; descriptors are 256 paired
intensity comparisons whose offsets are steered by the keypoint orientation.
Every constant is pinned so two runs (or two implementations) agree byte for
byte.
"""

import math
from dataclasses import dataclass

import numpy as np

from herbar import _kernels
from herbar.errors import ImageTooSmall
from herbar.imaging import as_gray, build_pyramid
from herbar.rng import XorShift64Star

DEFAULT_THRESHOLD = 20
DEFAULT_N_LEVELS = 4
DEFAULT_SCALE_FACTOR = 1.2
DEFAULT_MAX_FEATURES = 500
DEFAULT_NMS_RADIUS = 4

DETECT_MARGIN = 16
MOMENT_RADIUS = 15
# Rotated sampling offsets reach |13 * sqrt(2)| ~ 18.4 px from the center.
DESCRIPTOR_MARGIN = 19
PATTERN_SEED = 0x9E3779B97F4A7C15

MIN_EXTRACT_SIZE = 64

GRID_DIV = 8


def build_sampling_pattern(seed: int = PATTERN_SEED) -> np.ndarray:
    """256 offset quadruples (ax, ay, bx, by) in [-13, 13]^2, drawn from the
    pinned xorshift64* stream; quadruples with a == b are rejected."""
    rng = XorShift64Star(seed)
    rows = []
    while len(rows) < 256:
        q = [rng.next_u64() % 27 - 13 for _ in range(4)]
        if q[0] == q[2] and q[1] == q[3]:
            continue
        rows.append(q)
    return np.array(rows, dtype=np.int32)


SAMPLING_PATTERN = build_sampling_pattern()


def _disc_offsets(radius: int):
    dxs, dys = [], []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx * dx + dy * dy <= radius * radius:
                dxs.append(dx)
                dys.append(dy)
    return np.array(dxs, np.int32), np.array(dys, np.int32)


_DISC15_DX, _DISC15_DY = _disc_offsets(MOMENT_RADIUS)


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    level: int = 0
    angle: float = 0.0
    score: float = 0.0


@dataclass(frozen=True)
class FeatureSet:
    """Structure-of-arrays feature bundle, parallel across keypoints."""

    width: int
    height: int
    xs: np.ndarray  # float32, base-frame coords
    ys: np.ndarray  # float32
    levels: np.ndarray  # uint8
    angles: np.ndarray  # float32, radians
    scores: np.ndarray  # float32
    descriptors: np.ndarray  # uint8 (n, 32)

    def __len__(self):
        return len(self.xs)

    def keypoint(self, i: int) -> Keypoint:
        return Keypoint(
            float(self.xs[i]), float(self.ys[i]), int(self.levels[i]),
            float(self.angles[i]), float(self.scores[i]),
        )

    def points(self) -> np.ndarray:
        return np.stack([self.xs, self.ys], axis=1).astype(np.float64)

    @staticmethod
    def empty(width: int, height: int) -> "FeatureSet":
        return FeatureSet(
            width, height,
            np.empty(0, np.float32), np.empty(0, np.float32),
            np.empty(0, np.uint8), np.empty(0, np.float32),
            np.empty(0, np.float32), np.empty((0, 32), np.uint8),
        )

    def equals(self, other: "FeatureSet") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("xs", "ys", "levels", "angles", "scores", "descriptors")
            )
        )


@dataclass(frozen=True)
class ExtractParams:
    threshold: int = DEFAULT_THRESHOLD
    n_levels: int = DEFAULT_N_LEVELS
    scale_factor: float = DEFAULT_SCALE_FACTOR
    max_features: int = DEFAULT_MAX_FEATURES
    nms_radius: int = DEFAULT_NMS_RADIUS


def nms_sparse(xs, ys, scores, radius: int):
    """Keep points that dominate every neighbour within Euclidean `radius`.

    A point is suppressed iff some neighbour has a higher score, or an equal
    score and an earlier raster position, so the result does not depend on
    traversal order. Score and raster precedence are packed into one int64
    priority and compared through a disc max-filter.
    """
    n = len(xs)
    if n == 0:
        return np.zeros(0, bool)
    if radius <= 0:
        return np.ones(n, bool)
    xs = np.asarray(xs, np.int64)
    ys = np.asarray(ys, np.int64)
    h = int(ys.max()) + 1
    w = int(xs.max()) + 1
    area = h * w
    rank = ys * w + xs
    prio = np.asarray(scores, np.int64) * area + (area - rank)
    dense = np.zeros((h, w), np.int64)
    dense[ys, xs] = prio
    best = dense.copy()
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx == 0 and dy == 0:
                continue
            if dx * dx + dy * dy > radius * radius:
                continue
            ds0, ds1 = max(0, dy), min(h, h + dy)
            ss0, ss1 = max(0, -dy), min(h, h - dy)
            dc0, dc1 = max(0, dx), min(w, w + dx)
            sc0, sc1 = max(0, -dx), min(w, w - dx)
            np.maximum(
                best[ds0:ds1, dc0:dc1],
                dense[ss0:ss1, sc0:sc1],
                out=best[ds0:ds1, dc0:dc1],
            )
    return best[ys, xs] == prio


def detect_corners(img, threshold: int = DEFAULT_THRESHOLD,
                   nms_radius: int = DEFAULT_NMS_RADIUS,
                   margin: int = DETECT_MARGIN) -> list[Keypoint]:
    """Segment-test corners of one image, after non-maximum suppression.

    Coordinates are local to `img`; orientation is left unset.
    """
    a = as_gray(img)
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    xs, ys, scores = _kernels.fast_corners(a, int(threshold), int(margin))
    keep = nms_sparse(xs, ys, scores, nms_radius)
    return [
        Keypoint(float(xs[i]), float(ys[i]), 0, 0.0, float(scores[i]))
        for i in range(len(xs))
        if keep[i]
    ]


def compute_orientation(img, kp: Keypoint, radius: int = MOMENT_RADIUS) -> float:
    """Intensity-centroid angle atan2(m01, m10) of the disc at the keypoint."""
    a = as_gray(img)
    x, y = int(round(kp.x)), int(round(kp.y))
    h, w = a.shape
    if not (radius <= x < w - radius and radius <= y < h - radius):
        raise ValueError("orientation patch out of bounds")
    if radius == MOMENT_RADIUS:
        dxs, dys = _DISC15_DX, _DISC15_DY
    else:
        dxs, dys = _disc_offsets(radius)
    m10, m01 = _kernels.disc_moments(
        a, np.array([x], np.int32), np.array([y], np.int32), dxs, dys
    )
    return math.atan2(float(m01[0]), float(m10[0]))


def compute_descriptor(img, kp: Keypoint, pattern=None) -> np.ndarray:
    """Steered binary descriptor (32 uint8 bytes) for one keypoint."""
    a = as_gray(img)
    if pattern is None:
        pattern = SAMPLING_PATTERN
    x, y = int(round(kp.x)), int(round(kp.y))
    h, w = a.shape
    m = DESCRIPTOR_MARGIN
    if not (m <= x < w - m and m <= y < h - m):
        raise ValueError("descriptor patch out of bounds")
    desc = _kernels.steered_descriptors(
        a,
        np.array([x], np.int32), np.array([y], np.int32),
        np.array([math.cos(kp.angle)]), np.array([math.sin(kp.angle)]),
        pattern,
    )
    return desc[0]


def hamming(a, b) -> int:
    return int(_kernels.hamming_matrix(
        np.asarray(a, np.uint8).reshape(1, 32),
        np.asarray(b, np.uint8).reshape(1, 32),
    )[0, 0])


def extract(img, params: ExtractParams = ExtractParams()) -> FeatureSet:
    """Full pipeline: pyramid, detect, orient, describe, budgeted selection.

    Keypoints are reported in base-frame coordinates (level coords scaled by
    scale_factor**level). Selection caps each cell of an 8x8 grid at
    ceil(max_features/64)*2 by score, then keeps the global top
    max_features. Deterministic: equal scores keep the earlier candidate in
    (level, y, x) order.
    """
    a = as_gray(img)
    h, w = a.shape
    if w < MIN_EXTRACT_SIZE or h < MIN_EXTRACT_SIZE:
        raise ImageTooSmall(f"extract needs >= {MIN_EXTRACT_SIZE} px per side")

    pyr = build_pyramid(a, params.n_levels, params.scale_factor)
    cand = []  # (score, level, x_lvl, y_lvl, angle, cos, sin)
    for level, lvl_img in enumerate(pyr.levels):
        lh, lw = lvl_img.shape
        xs, ys, scores = _kernels.fast_corners(
            lvl_img, params.threshold, DETECT_MARGIN
        )
        keep = nms_sparse(xs, ys, scores, params.nms_radius)
        m = DESCRIPTOR_MARGIN
        keep &= (xs >= m) & (xs < lw - m) & (ys >= m) & (ys < lh - m)
        xs, ys, scores = xs[keep], ys[keep], scores[keep]
        if len(xs) == 0:
            continue
        m10, m01 = _kernels.disc_moments(lvl_img, xs, ys, _DISC15_DX, _DISC15_DY)
        angles = [math.atan2(float(b), float(a_)) for a_, b in zip(m10, m01)]
        coss = np.array([math.cos(t) for t in angles])
        sins = np.array([math.sin(t) for t in angles])
        descs = _kernels.steered_descriptors(
            lvl_img, xs, ys, coss, sins, SAMPLING_PATTERN
        )
        scale = params.scale_factor**level
        for i in range(len(xs)):
            cand.append((
                int(scores[i]), level,
                float(xs[i]) * scale, float(ys[i]) * scale,
                float(angles[i]), descs[i],
            ))

    if not cand:
        return FeatureSet.empty(w, h)

    cap = -(-params.max_features // (GRID_DIV * GRID_DIV)) * 2
    cells: dict[tuple[int, int], list[int]] = {}
    for idx, c in enumerate(cand):
        gx = min(GRID_DIV - 1, int(c[2] * GRID_DIV / w))
        gy = min(GRID_DIV - 1, int(c[3] * GRID_DIV / h))
        cells.setdefault((gx, gy), []).append(idx)
    pool = []
    for key in sorted(cells):
        members = sorted(cells[key], key=lambda i: -cand[i][0])[:cap]
        pool.extend(members)
    pool.sort()  # restore candidate order so the global sort is stable on it
    pool = sorted(pool, key=lambda i: -cand[i][0])[: params.max_features]

    n = len(pool)
    fs = FeatureSet(
        w, h,
        np.array([cand[i][2] for i in pool], np.float32),
        np.array([cand[i][3] for i in pool], np.float32),
        np.array([cand[i][1] for i in pool], np.uint8),
        np.array([cand[i][4] for i in pool], np.float32),
        np.array([cand[i][0] for i in pool], np.float32),
        np.stack([cand[i][5] for i in pool]) if n else np.empty((0, 32), np.uint8),
    )
    return fs
