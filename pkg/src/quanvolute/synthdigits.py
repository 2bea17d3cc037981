"""Deterministic synthetic digit images in MNIST IDX layout.

A stand-in for environments where the real MNIST files cannot be fetched:
the tests and demos use it to exercise the full 28x28 -> 10x10 pipeline,
training harness, and model comparison end to end. Each image is a 5x7
digit glyph upscaled to 15x21, translated by a random offset, blurred,
intensity-jittered, and buried in pixel noise; the jitter and noise keep the
task hard enough that the three models do not all saturate.

This generator is a fixture, not part of the experiment pipeline, so it uses
numpy's PCG64 for speed rather than the portable xoshiro stream.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

_FONT = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}

_SCALE = 3  # glyph cell -> pixels; 5x7 becomes 15x21
MAX_SHIFT = 4
NOISE_LEVEL = 0.30


def _glyph(digit: int) -> np.ndarray:
    rows = _FONT[digit]
    bitmap = np.array([[int(c) for c in row] for row in rows], dtype=np.float64)
    return np.kron(bitmap, np.ones((_SCALE, _SCALE)))


_GLYPHS = [_glyph(d) for d in range(10)]


def _blur(image: np.ndarray) -> np.ndarray:
    padded = np.pad(image, 1)
    out = np.zeros_like(image)
    for dy in range(3):
        for dx in range(3):
            out += padded[dy : dy + 28, dx : dx + 28]
    return out / 9.0


def render_digit(rng: np.random.Generator, digit: int) -> np.ndarray:
    """One noisy 28x28 uint8 image of `digit`."""
    glyph = _GLYPHS[digit]
    gh, gw = glyph.shape
    canvas = np.zeros((28, 28))
    base_y = (28 - gh) // 2
    base_x = (28 - gw) // 2
    dy = int(rng.integers(-MAX_SHIFT, MAX_SHIFT + 1))
    dx = int(rng.integers(-MAX_SHIFT, MAX_SHIFT + 1))
    y = min(max(base_y + dy, 0), 28 - gh)
    x = min(max(base_x + dx, 0), 28 - gw)
    intensity = rng.uniform(0.55, 1.0)
    canvas[y : y + gh, x : x + gw] = glyph * intensity
    canvas = _blur(canvas)
    canvas += rng.uniform(0.0, NOISE_LEVEL, size=(28, 28))
    return (np.clip(canvas, 0.0, 1.0) * 255.0).astype(np.uint8)


def generate(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(images (n, 28, 28) uint8, labels (n,) uint8), fully seeded."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, size=n).astype(np.uint8)
    images = np.empty((n, 28, 28), dtype=np.uint8)
    for i in range(n):
        images[i] = render_digit(rng, int(labels[i]))
    return images, labels


def write_idx(path, images: np.ndarray | None = None, labels: np.ndarray | None = None, compress: bool = False) -> None:
    """Write one IDX file (image or label payload, not both)."""
    if (images is None) == (labels is None):
        raise ValueError("pass exactly one of images or labels")
    if images is not None:
        n, rows, cols = images.shape
        payload = struct.pack(">IIII", 0x00000803, n, rows, cols) + images.tobytes()
    else:
        payload = struct.pack(">II", 0x00000801, labels.shape[0]) + labels.astype(np.uint8).tobytes()
    if compress:
        payload = gzip.compress(payload, mtime=0)
    Path(path).write_bytes(payload)


def write_mnist_layout(
    data_dir,
    train_n: int = 60000,
    test_n: int = 10000,
    seed: int = 20260810,
    compress: bool = False,
) -> None:
    """Populate a directory with the four standard MNIST-named IDX files."""
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    suffix = ".gz" if compress else ""
    train_images, train_labels = generate(train_n, seed)
    test_images, test_labels = generate(test_n, seed + 1)
    write_idx(data_dir / f"train-images-idx3-ubyte{suffix}", images=train_images, compress=compress)
    write_idx(data_dir / f"train-labels-idx1-ubyte{suffix}", labels=train_labels, compress=compress)
    write_idx(data_dir / f"t10k-images-idx3-ubyte{suffix}", images=test_images, compress=compress)
    write_idx(data_dir / f"t10k-labels-idx1-ubyte{suffix}", labels=test_labels, compress=compress)
