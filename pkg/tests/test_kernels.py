"""Backend equivalence: the compiled kernels and the numpy fallback must be
byte-identical on any input, so backend selection can never change results."""

import math

import numpy as np
import pytest

from herbar._kernels import pyfallback
from herbar.features import SAMPLING_PATTERN

native = pytest.importorskip(
    "herbar._kernels._native", reason="compiled kernels not built"
)


def _rand_img(rng, w, h):
    return rng.integers(0, 256, (h, w), dtype=np.uint8)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("threshold", [5, 20, 60])
def test_fast_corners_equal(seed, threshold):
    rng = np.random.Generator(np.random.PCG64(seed))
    img = _rand_img(rng, int(rng.integers(40, 320)), int(rng.integers(40, 320)))
    for margin in (3, 16):
        a = pyfallback.fast_corners(img, threshold, margin)
        b = native.fast_corners(img, threshold, margin)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)


def test_fast_corners_structured_image():
    # blocky images produce long runs and exercise the wrap-around paths
    rng = np.random.Generator(np.random.PCG64(5))
    img = np.kron(
        rng.integers(0, 256, (12, 12), dtype=np.uint8), np.ones((9, 9), np.uint8)
    )
    a = pyfallback.fast_corners(img, 20, 3)
    b = native.fast_corners(img, 20, 3)
    assert len(a[0]) > 0
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_disc_moments_equal():
    rng = np.random.Generator(np.random.PCG64(7))
    img = _rand_img(rng, 200, 160)
    xs = rng.integers(16, 184, 80).astype(np.int32)
    ys = rng.integers(16, 144, 80).astype(np.int32)
    disc = [(dx, dy) for dy in range(-15, 16) for dx in range(-15, 16)
            if dx * dx + dy * dy <= 225]
    dxs = np.array([d[0] for d in disc], np.int32)
    dys = np.array([d[1] for d in disc], np.int32)
    a10, a01 = pyfallback.disc_moments(img, xs, ys, dxs, dys)
    b10, b01 = native.disc_moments(img, xs, ys, dxs, dys)
    assert np.array_equal(a10, b10)
    assert np.array_equal(a01, b01)


def test_steered_descriptors_equal():
    rng = np.random.Generator(np.random.PCG64(9))
    img = _rand_img(rng, 260, 220)
    n = 120
    xs = rng.integers(19, 241, n).astype(np.int32)
    ys = rng.integers(19, 201, n).astype(np.int32)
    angles = rng.uniform(-math.pi, math.pi, n)
    coss = np.array([math.cos(t) for t in angles])
    sins = np.array([math.sin(t) for t in angles])
    a = pyfallback.steered_descriptors(img, xs, ys, coss, sins, SAMPLING_PATTERN)
    b = native.steered_descriptors(img, xs, ys, coss, sins, SAMPLING_PATTERN)
    assert np.array_equal(a, b)


def test_hamming_matrix_equal():
    rng = np.random.Generator(np.random.PCG64(13))
    a = rng.integers(0, 256, (90, 32), dtype=np.uint8)
    b = rng.integers(0, 256, (70, 32), dtype=np.uint8)
    assert np.array_equal(
        pyfallback.hamming_matrix(a, b), native.hamming_matrix(a, b)
    )
    assert pyfallback.hamming_matrix(a[:0], b).shape == (0, 70)


@pytest.mark.parametrize("seed", [3, 4])
def test_warp_bilinear_equal(seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    img = _rand_img(rng, 180, 140)
    h = np.array([
        [rng.uniform(0.7, 1.3), rng.uniform(-0.2, 0.2), rng.uniform(-20, 20)],
        [rng.uniform(-0.2, 0.2), rng.uniform(0.7, 1.3), rng.uniform(-20, 20)],
        [rng.uniform(-1e-4, 1e-4), rng.uniform(-1e-4, 1e-4), 1.0],
    ])
    hinv = np.linalg.inv(h)
    a = pyfallback.warp_bilinear(img, hinv, 200, 150, 255)
    b = native.warp_bilinear(img, hinv, 200, 150, 255)
    assert np.array_equal(a, b)


def test_box_downsample_equal():
    rng = np.random.Generator(np.random.PCG64(21))
    for _ in range(4):
        w, h = int(rng.integers(33, 400)), int(rng.integers(33, 400))
        img = _rand_img(rng, w, h)
        ow, oh = int(rng.integers(32, w + 1)), int(rng.integers(32, h + 1))
        a = pyfallback.box_downsample(img, ow, oh)
        b = native.box_downsample(img, ow, oh)
        assert np.array_equal(a, b)


def test_full_extract_identical_across_backends(corpus):
    """The whole pipeline, not just kernels: byte-identical FeatureSets."""
    import subprocess
    import sys

    code = (
        "import numpy as np\n"
        "from herbar.synthetic import textured_rgba\n"
        "from herbar.imaging import to_grayscale\n"
        "from herbar.features import extract\n"
        "fs = extract(to_grayscale(textured_rgba(424, 256, 240)))\n"
        "print(np.concatenate([fs.xs.view(np.uint8), fs.ys.view(np.uint8),"
        " fs.levels, fs.angles.view(np.uint8), fs.scores.view(np.uint8),"
        " fs.descriptors.ravel()]).sum(dtype=np.uint64),"
        " len(fs), fs.descriptors.tobytes().hex()[:64])\n"
    )
    outs = []
    for backend in ("native", "python"):
        r = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True, text=True,
            env={"HERBAR_KERNELS": backend, "PATH": "/usr/bin:/bin"},
        )
        assert r.returncode == 0, r.stderr
        outs.append(r.stdout)
    assert outs[0] == outs[1]
