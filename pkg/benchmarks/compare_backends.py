"""Timing comparison: compiled kernels vs the pure numpy fallback.

Run as `python benchmarks/compare_backends.py`. Also asserts both backends
agree byte-for-byte on every benchmarked call, so a speedup never comes at
the cost of drift.
"""

import math
import time

import numpy as np

from herbar._kernels import pyfallback
from herbar.features import SAMPLING_PATTERN
from herbar.synthetic import textured_rgba
from herbar.imaging import to_grayscale

try:
    from herbar._kernels import _native
except ImportError:
    _native = None


def timed(fn, *args, repeats=5):
    best = math.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench(name, fn_name, *args, repeats=5):
    py_out, py_t = timed(getattr(pyfallback, fn_name), *args, repeats=repeats)
    if _native is None:
        print(f"{name:<28} python {py_t * 1e3:8.2f} ms   native: not built")
        return
    nat_out, nat_t = timed(getattr(_native, fn_name), *args, repeats=repeats)
    if isinstance(py_out, tuple):
        agree = all(np.array_equal(a, b) for a, b in zip(py_out, nat_out))
    else:
        agree = np.array_equal(py_out, nat_out)
    status = "identical" if agree else "MISMATCH!"
    print(
        f"{name:<28} python {py_t * 1e3:8.2f} ms   native {nat_t * 1e3:8.2f} ms"
        f"   speedup {py_t / nat_t:6.1f}x   {status}"
    )


def main():
    gray = to_grayscale(textured_rgba(7, 768, 768))
    xs, ys, scores = pyfallback.fast_corners(gray, 20, 16)
    order = np.argsort(-scores, kind="stable")[:500]
    kx = np.ascontiguousarray(xs[order], np.int32)
    ky = np.ascontiguousarray(ys[order], np.int32)
    angles = np.linspace(-math.pi, math.pi, len(kx))
    coss = np.cos(angles)
    sins = np.sin(angles)
    # clamp keypoints inward so descriptor sampling stays in bounds
    kx = np.clip(kx, 19, gray.shape[1] - 20).astype(np.int32)
    ky = np.clip(ky, 19, gray.shape[0] - 20).astype(np.int32)
    disc = [(dx, dy) for dy in range(-15, 16) for dx in range(-15, 16)
            if dx * dx + dy * dy <= 225]
    dxs = np.array([d[0] for d in disc], np.int32)
    dys = np.array([d[1] for d in disc], np.int32)
    desc = pyfallback.steered_descriptors(gray, kx, ky, coss, sins, SAMPLING_PATTERN)
    hrot = np.array([[0.9, 0.1, 10.0], [-0.1, 0.95, 5.0], [1e-5, 0.0, 1.0]])

    print(f"image {gray.shape[1]}x{gray.shape[0]}, {len(kx)} keypoints")
    bench("fast_corners", "fast_corners", gray, 20, 16)
    bench("disc_moments", "disc_moments", gray, kx, ky, dxs, dys)
    bench("steered_descriptors", "steered_descriptors",
          gray, kx, ky, coss, sins, SAMPLING_PATTERN)
    bench("hamming_matrix", "hamming_matrix", desc, desc)
    bench("warp_bilinear", "warp_bilinear", gray, hrot, 768, 768, 255)
    bench("box_downsample", "box_downsample", gray, 640, 640)


if __name__ == "__main__":
    main()
