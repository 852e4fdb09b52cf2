"""Kernel backend selection.

The compiled extension is used when importable; the numpy fallback otherwise.
Set HERBAR_KERNELS=python (or =native) to force a backend. Both produce
byte-identical results; only speed differs.
"""

import os

from herbar._kernels import pyfallback

_choice = os.environ.get("HERBAR_KERNELS", "auto").lower()

if _choice == "python":
    _impl = pyfallback
    KERNEL_BACKEND = "python"
elif _choice == "native":
    from herbar._kernels import _native as _impl

    KERNEL_BACKEND = "native"
else:
    try:
        from herbar._kernels import _native as _impl

        KERNEL_BACKEND = "native"
    except ImportError:
        _impl = pyfallback
        KERNEL_BACKEND = "python"

CIRCLE16 = pyfallback.CIRCLE16

fast_corners = _impl.fast_corners
disc_moments = _impl.disc_moments
steered_descriptors = _impl.steered_descriptors
hamming_matrix = _impl.hamming_matrix
warp_bilinear = _impl.warp_bilinear
box_downsample = _impl.box_downsample

__all__ = [
    "KERNEL_BACKEND",
    "CIRCLE16",
    "fast_corners",
    "disc_moments",
    "steered_descriptors",
    "hamming_matrix",
    "warp_bilinear",
    "box_downsample",
]
