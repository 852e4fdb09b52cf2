"""Raster types and image operations: grayscale, pyramid, warp, occlusion.

Grayscale images are uint8 arrays of shape (h, w); color images are RGBA
uint8 arrays of shape (h, w, 4), both row-major. All operations are pure
functions and safe to call from any thread.
"""

from dataclasses import dataclass

import numpy as np

from herbar import _kernels
from herbar.errors import ImageTooSmall, SingularHomography

# Below this, the 31x31 descriptor patch no longer fits; pyramid levels
# smaller than this are dropped.
MIN_LEVEL_SIZE = 32


def as_gray(img) -> np.ndarray:
    a = np.ascontiguousarray(img, dtype=np.uint8)
    if a.ndim != 2:
        raise ValueError(f"grayscale image must be (h, w), got {a.shape}")
    return a


def as_rgba(img) -> np.ndarray:
    a = np.ascontiguousarray(img, dtype=np.uint8)
    if a.ndim != 3 or a.shape[2] != 4:
        raise ValueError(f"color image must be (h, w, 4) RGBA, got {a.shape}")
    return a


def to_grayscale(img) -> np.ndarray:
    """BT.601 luma, rounded half up: Y = round(0.299 R + 0.587 G + 0.114 B)."""
    a = as_rgba(img)
    r = a[:, :, 0].astype(np.float64)
    g = a[:, :, 1].astype(np.float64)
    b = a[:, :, 2].astype(np.float64)
    y = np.floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5)
    return np.clip(y, 0, 255).astype(np.uint8)


def expand_to_rgba(gray) -> np.ndarray:
    """Gray -> opaque RGBA with R=G=B=Y (the luma round trip fixed point)."""
    a = as_gray(gray)
    out = np.empty(a.shape + (4,), np.uint8)
    out[:, :, 0] = a
    out[:, :, 1] = a
    out[:, :, 2] = a
    out[:, :, 3] = 255
    return out


def _round_half_up(v: float) -> int:
    return int(np.floor(v + 0.5))


@dataclass(frozen=True)
class Pyramid:
    levels: list
    scale_factor: float

    def __len__(self):
        return len(self.levels)

    @property
    def base(self):
        return self.levels[0]


def build_pyramid(img, n_levels: int, scale_factor: float) -> Pyramid:
    """Multi-scale box-filtered pyramid. Level k has dimensions
    round(base / scale_factor**k); levels below 32x32 are dropped."""
    a = as_gray(img)
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    if scale_factor <= 1.0:
        raise ValueError("scale_factor must be > 1")
    h, w = a.shape
    if w < MIN_LEVEL_SIZE or h < MIN_LEVEL_SIZE:
        raise ImageTooSmall(f"pyramid base {w}x{h} below {MIN_LEVEL_SIZE}")
    levels = [a]
    for k in range(1, n_levels):
        s = scale_factor**k
        lw = _round_half_up(w / s)
        lh = _round_half_up(h / s)
        if lw < MIN_LEVEL_SIZE or lh < MIN_LEVEL_SIZE:
            break
        levels.append(_kernels.box_downsample(a, lw, lh))
    return Pyramid(levels=levels, scale_factor=float(scale_factor))


def warp_perspective(img, h_matrix, out_w: int, out_h: int, fill: int = 255):
    """Inverse-mapped perspective warp with bilinear sampling.

    h_matrix maps source coordinates to output coordinates; each output pixel
    samples the source at H^-1 (x, y, 1). Out-of-bounds samples read `fill`.
    """
    a = as_gray(img)
    hm = np.asarray(h_matrix, dtype=np.float64).reshape(3, 3)
    det = np.linalg.det(hm)
    if abs(det) <= 1e-12:
        raise SingularHomography(f"|det H| = {abs(det):.3e}")
    hinv = np.ascontiguousarray(np.linalg.inv(hm))
    return _kernels.warp_bilinear(a, hinv, int(out_w), int(out_h), int(fill))


_SIDES = ("left", "right", "top", "bottom")


def occlude(img, fraction: float, side: str = "left", fill: int = 255):
    """Mask a side band covering floor(fraction * area) pixels with `fill`.

    Pixels are filled in order from the chosen side: column-major for
    left/right bands, row-major for top/bottom.
    """
    a = as_gray(img).copy()
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    if side not in _SIDES:
        raise ValueError(f"side must be one of {_SIDES}")
    h, w = a.shape
    k = int(np.floor(fraction * w * h))
    if k == 0:
        return a
    if side in ("left", "right"):
        cols, rem = divmod(k, h)
        if side == "left":
            a[:, :cols] = fill
            if rem:
                a[:rem, cols] = fill
        else:
            if cols:
                a[:, w - cols:] = fill
            if rem:
                a[:rem, w - cols - 1] = fill
    else:
        rows, rem = divmod(k, w)
        if side == "top":
            a[:rows, :] = fill
            if rem:
                a[rows, :rem] = fill
        else:
            if rows:
                a[h - rows:, :] = fill
            if rem:
                a[h - rows - 1, :rem] = fill
    return a
