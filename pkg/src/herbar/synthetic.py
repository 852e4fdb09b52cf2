"""Deterministic synthetic test pictures.

Real herb photographs are data, not method; the test and demo corpus is
generated instead: high-texture collages that register well, and a
deliberately poor picture (one small central patch of detail, like a herb
specimen occupying a corner of a blank sheet) that recognizes whole but
fails once half the sheet is covered.
"""

import json
from pathlib import Path

import numpy as np

from herbar.pngio import save_png


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def textured_rgba(seed: int, width: int = 256, height: int = 256,
                  n_shapes: int = 260) -> np.ndarray:
    """Collage of random rectangles and ellipses; corner-dense everywhere."""
    rng = _rng(seed)
    img = np.empty((height, width, 4), np.uint8)
    img[:, :, :3] = rng.integers(90, 166, 3, dtype=np.uint8)
    img[:, :, 3] = 255
    for _ in range(n_shapes):
        w = int(rng.integers(8, 44))
        h = int(rng.integers(8, 44))
        x = int(rng.integers(0, max(1, width - w)))
        y = int(rng.integers(0, max(1, height - h)))
        color = rng.integers(0, 256, 3, dtype=np.uint8)
        if rng.integers(0, 2) == 0:
            img[y:y + h, x:x + w, :3] = color
        else:
            yy, xx = np.ogrid[:h, :w]
            mask = ((xx - w / 2) / (w / 2)) ** 2 + ((yy - h / 2) / (h / 2)) ** 2 <= 1
            img[y:y + h, x:x + w, :3][mask] = color
    return img


def low_texture_rgba(seed: int, width: int = 256, height: int = 256,
                     n_marks: int = 7) -> np.ndarray:
    """Nearly blank sheet with one small central patch of detail."""
    rng = _rng(seed)
    img = np.empty((height, width, 4), np.uint8)
    img[:, :, :3] = 228
    img[:, :, 3] = 255
    cx, cy = width // 2, height // 2
    r = min(width, height) // 7
    for _ in range(n_marks):
        ang = rng.uniform(0, 2 * np.pi)
        rad = rng.uniform(0, r * 0.8)
        mx = int(cx + rad * np.cos(ang))
        my = int(cy + rad * np.sin(ang))
        s = int(rng.integers(5, 9))
        color = rng.integers(0, 90, 3, dtype=np.uint8)
        img[my - s // 2:my - s // 2 + s, mx - s // 2:mx - s // 2 + s, :3] = color
    return img


def fixture_dims(index: int) -> tuple[int, int]:
    """Per-fixture image sizes, all distinct in height from their neighbour
    so side-by-side composites always rescale the second picture."""
    return 256 + 16 * (index % 3), 240 + 16 * (index % 4)


def write_demo_corpus(out_dir, count: int = 8, low_texture_last: bool = True,
                      seed0: int = 1000):
    """Write PNG fixtures plus a build manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i in range(count):
        name = f"herb-{i + 1:03d}"
        w, h = fixture_dims(i)
        if low_texture_last and i == count - 1:
            img = low_texture_rgba(seed0 + i, w, h)
        else:
            img = textured_rgba(seed0 + i, w, h)
        path = out / f"{name}.png"
        save_png(path, img)
        manifest.append(
            {"name": name, "image_path": str(path), "content_id": name}
        )
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), "utf-8")
    return manifest_path


def main(argv=None):
    import argparse

    ap = argparse.ArgumentParser(
        description="generate a synthetic demo corpus (PNGs + manifest)"
    )
    ap.add_argument("out_dir")
    ap.add_argument("--count", type=int, default=8)
    ap.add_argument("--seed", type=int, default=1000)
    args = ap.parse_args(argv)
    path = write_demo_corpus(args.out_dir, args.count, seed0=args.seed)
    print(f"wrote {args.count} pictures and {path}")


if __name__ == "__main__":
    main()
