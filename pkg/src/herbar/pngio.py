"""PNG file I/O for the CLI (8-bit RGBA and 8-bit gray)."""

import numpy as np
from PIL import Image as PILImage


def load_png(path):
    """Load a PNG. Returns a (h, w) gray array for grayscale files, a
    (h, w, 4) RGBA array otherwise."""
    with PILImage.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        if im.mode != "RGBA":
            im = im.convert("RGBA")
        return np.asarray(im, dtype=np.uint8)


def save_png(path, img) -> None:
    a = np.asarray(img, dtype=np.uint8)
    if a.ndim == 2:
        PILImage.fromarray(a, mode="L").save(path, format="PNG")
    elif a.ndim == 3 and a.shape[2] == 4:
        PILImage.fromarray(a, mode="RGBA").save(path, format="PNG")
    else:
        raise ValueError(f"cannot encode array of shape {a.shape} as PNG")
