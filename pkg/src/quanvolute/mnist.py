"""MNIST IDX ingestion, 28x28 -> 10x10 box downscaling, epoch subsampling.

IDX layout (big endian): images carry magic 0x00000803 then count, rows,
cols and raw uint8 pixels row-wise; labels carry magic 0x00000801 then count
and raw uint8 labels. Files may be gzip-compressed (detected by the 0x1f8b
signature, independent of extension).

Downscaling uses an area-weighted box filter: output cell (i, j) averages
the 2.8 x 2.8 source region it covers, with fractional rows/columns weighted
by overlap, then divides by 255. The filter preserves the image mean exactly
(up to float rounding), which the tests pin to 1e-12.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataConsistencyError, FormatError, ShapeError
from .rng import Xoshiro256StarStar, derive_seed

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_all(path) -> bytes:
    with open(path, "rb") as f:
        head = f.read(2)
        rest = f.read()
    raw = head + rest
    if head == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def _be32(data: bytes, offset: int) -> int:
    return struct.unpack_from(">I", data, offset)[0]


def load_idx_images(path) -> np.ndarray:
    """(N, rows, cols) uint8 image stack from an IDX3 file."""
    data = _read_all(path)
    if len(data) < 16:
        raise FormatError(f"{path}: truncated IDX image header")
    magic = _be32(data, 0)
    if magic != IMAGE_MAGIC:
        raise FormatError(f"{path}: bad image magic 0x{magic:08x}")
    count, rows, cols = _be32(data, 4), _be32(data, 8), _be32(data, 12)
    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise OSError(f"{path}: truncated image payload ({len(data)} < {expected} bytes)")
    pixels = np.frombuffer(data, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    """(N,) uint8 labels from an IDX1 file."""
    data = _read_all(path)
    if len(data) < 8:
        raise FormatError(f"{path}: truncated IDX label header")
    magic = _be32(data, 0)
    if magic != LABEL_MAGIC:
        raise FormatError(f"{path}: bad label magic 0x{magic:08x}")
    count = _be32(data, 4)
    if len(data) < 8 + count:
        raise OSError(f"{path}: truncated label payload")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=8)


def load_idx(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    """Raw 28x28 byte images plus labels, counts cross-checked."""
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise DataConsistencyError(
            f"{images.shape[0]} images but {labels.shape[0]} labels"
        )
    if images.shape[1:] != (28, 28):
        raise ShapeError(f"expected 28x28 images, got {images.shape[1:]}")
    return images, labels


def _box_weights(dst: int, src: int) -> np.ndarray:
    """(dst, src) row-normalized overlap weights of the 1-D box filter."""
    scale = src / dst
    w = np.zeros((dst, src))
    for i in range(dst):
        lo = i * scale
        hi = (i + 1) * scale
        for k in range(int(np.floor(lo)), min(src, int(np.ceil(hi)))):
            w[i, k] = min(hi, k + 1) - max(lo, k)
    return w / scale


_W10 = _box_weights(10, 28)


def downscale_10x10(img28: np.ndarray) -> np.ndarray:
    """Area-average a 28x28 byte image down to 10x10 floats in [0, 1]."""
    img28 = np.asarray(img28)
    if img28.shape != (28, 28):
        raise ShapeError(f"expected a 28x28 image, got {img28.shape}")
    return (_W10 @ img28.astype(np.float64) @ _W10.T) / 255.0


def epoch_sample(dataset_size: int, k: int, seed: int, epoch_index: int) -> np.ndarray:
    """k distinct indices for one epoch, a pure function of (seed, epoch).

    The returned order doubles as the visit order during training.
    """
    if k > dataset_size:
        raise ValueError(f"cannot sample {k} of {dataset_size} items")
    rng = Xoshiro256StarStar(derive_seed(seed, "epoch", epoch_index))
    return rng.sample_indices(dataset_size, k)


@dataclass(frozen=True)
class Dataset:
    """Preprocessed split: 10x10 images in [0, 1] plus digit labels."""

    images: np.ndarray  # (N, 10, 10) float64
    labels: np.ndarray  # (N,) int64
    split: str

    def __len__(self) -> int:
        return self.images.shape[0]


_SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _resolve(data_dir: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx")):
        candidate = data_dir / name
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"no {stem}[.gz] under {data_dir}")


def load_dataset(data_dir, split: str) -> Dataset:
    """Load and preprocess one split from a directory of IDX files."""
    if split not in _SPLIT_FILES:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    data_dir = Path(data_dir)
    img_stem, lbl_stem = _SPLIT_FILES[split]
    raw_images, labels = load_idx(_resolve(data_dir, img_stem), _resolve(data_dir, lbl_stem))
    images = np.stack([downscale_10x10(img) for img in raw_images])
    return Dataset(images, labels.astype(np.int64), split)
