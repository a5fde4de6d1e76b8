"""Training datasets: the six-point circle set and IDX image files.

The IDX layout is the classic big-endian container: a 32-bit magic
(0x00000803 for a rank-3 image tensor, 0x00000801 for a rank-1 label
vector), then one 32-bit count per dimension, then the payload bytes.
Images are 28 x 28 unsigned bytes, scaled here to [0, 1] by 1/255.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractViolationError, FormatError
from .rng import RngStream
from .training import SampleSet

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28


def make_circle_dataset() -> SampleSet:
    """Six unit-circle points at angles i*pi/3, i = 1..6, labels alternating.

    Point i sits at (cos(i pi / 3), sin(i pi / 3)) with label 0 for odd i and
    1 for even i, so neighbors always disagree: (0,1,0,1,0,1).
    """
    i = np.arange(1, 7)
    theta = i * np.pi / 3.0
    X = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    y = (i % 2 == 0).astype(np.int64)
    return SampleSet(X=X, y=y)


@dataclass
class MnistSubset:
    images: np.ndarray  # (n, 784) in [0, 1]
    digits: np.ndarray  # (n,) 0..9
    parity: np.ndarray  # (n,) digit mod 2: odd -> 1, even -> 0
    digests: dict  # file path -> sha256 hex

    @property
    def n(self) -> int:
        return self.images.shape[0]

    def sample_set(self) -> SampleSet:
        return SampleSet(X=self.images, y=self.parity)


def _read_exact(data: bytes, offset: int, count: int, what: str, path) -> bytes:
    if offset + count > len(data):
        raise FormatError(f"{path}: truncated while reading {what} "
                          f"(need {count} bytes at offset {offset}, file has {len(data)})")
    return data[offset: offset + count]


def _parse_idx_images(data: bytes, path) -> np.ndarray:
    magic, = struct.unpack(">i", _read_exact(data, 0, 4, "image magic", path))
    if magic != IMAGE_MAGIC:
        raise FormatError(f"{path}: bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
    count, rows, cols = struct.unpack(">iii", _read_exact(data, 4, 12, "image dimensions", path))
    if rows != IMAGE_SIDE or cols != IMAGE_SIDE:
        raise FormatError(f"{path}: image dimensions {rows}x{cols}, expected "
                          f"{IMAGE_SIDE}x{IMAGE_SIDE}")
    payload = _read_exact(data, 16, count * rows * cols, "image payload", path)
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows * cols)
    return pixels.astype(np.float64) / 255.0


def _parse_idx_labels(data: bytes, path) -> np.ndarray:
    magic, = struct.unpack(">i", _read_exact(data, 0, 4, "label magic", path))
    if magic != LABEL_MAGIC:
        raise FormatError(f"{path}: bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
    count, = struct.unpack(">i", _read_exact(data, 4, 4, "label count", path))
    payload = _read_exact(data, 8, count, "label payload", path)
    labels = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    if np.any(labels > 9):
        raise FormatError(f"{path}: label values exceed 9")
    return labels


def load_mnist(images_path, labels_path, n: int, rng: RngStream) -> MnistSubset:
    """Seeded uniform subset (without replacement) of an IDX image/label pair."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    img_bytes = images_path.read_bytes()
    lab_bytes = labels_path.read_bytes()
    images = _parse_idx_images(img_bytes, images_path)
    labels = _parse_idx_labels(lab_bytes, labels_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"record count mismatch: {images_path} has {images.shape[0]} images, "
            f"{labels_path} has {labels.shape[0]} labels"
        )
    if n > images.shape[0]:
        raise ContractViolationError(f"requested {n} samples, files hold {images.shape[0]}")
    if n < 1:
        raise ContractViolationError(f"subset size must be >= 1, got {n}")
    idx = rng.permutation(images.shape[0])[:n]
    digits = labels[idx]
    return MnistSubset(
        images=images[idx].copy(),
        digits=digits,
        parity=(digits % 2).astype(np.int64),
        digests={
            str(images_path): hashlib.sha256(img_bytes).hexdigest(),
            str(labels_path): hashlib.sha256(lab_bytes).hexdigest(),
        },
    )


def write_idx_images(path, pixels: np.ndarray):
    """Write a (count, 784) or (count, 28, 28) uint8 array as an IDX image file."""
    pixels = np.asarray(pixels, dtype=np.uint8).reshape(-1, IMAGE_SIDE, IMAGE_SIDE)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">iiii", IMAGE_MAGIC, pixels.shape[0], IMAGE_SIDE, IMAGE_SIDE))
        fh.write(pixels.tobytes())


def write_idx_labels(path, labels: np.ndarray):
    labels = np.asarray(labels)
    if np.any(labels < 0) or np.any(labels > 9):
        raise ContractViolationError("digit labels must lie in 0..9")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ii", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.astype(np.uint8).tobytes())


def write_synthetic_idx(images_path, labels_path, count: int, rng: RngStream):
    """Generate a synthetic stand-in image/label pair in IDX format.

    Sparse 28 x 28 images: each pixel lights with probability 0.2 at an
    intensity uniform in [0.5, 1] (so squared norms land near the classic
    handwritten-digit scale of ~90), digits uniform in 0..9. Useful where
    the real dataset cannot be fetched; the statistics, not the semantics,
    are what the kernel experiments are sensitive to.
    """
    if count < 1:
        raise ContractViolationError(f"count must be >= 1, got {count}")
    p = rng.uniform((count * IMAGE_SIDE * IMAGE_SIDE)).reshape(count, -1)
    inten = rng.uniform((count * IMAGE_SIDE * IMAGE_SIDE)).reshape(count, -1)
    lit = p < 0.2
    img = np.where(lit, np.round((0.5 + 0.5 * inten) * 255.0), 0.0).astype(np.uint8)
    digits = np.floor(rng.uniform(count) * 10).astype(np.int64)
    digits = np.clip(digits, 0, 9)
    write_idx_images(images_path, img)
    write_idx_labels(labels_path, digits)
