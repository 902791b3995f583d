"""CIFAR-10 binary batch records: the file schema shared with the
encryption CLI (3073-byte records: label byte, then 1024 R, 1024 G, 1024 B
bytes, row-major).  Implemented here independently; the byte layout is the
interface between the two packages."""

from __future__ import annotations

from pathlib import Path

import numpy as np

IMG_DIM = 32
RECORD_BYTES = 1 + 3 * IMG_DIM * IMG_DIM
NUM_CLASSES = 10


def read_batch(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (labels (N,) uint8, images (N, 3, 32, 32) uint8)."""
    data = Path(path).read_bytes()
    if len(data) % RECORD_BYTES:
        raise ValueError(f"{path}: length {len(data)} is not a multiple of {RECORD_BYTES}")
    n = len(data) // RECORD_BYTES
    arr = np.frombuffer(data, dtype=np.uint8).reshape(n, RECORD_BYTES)
    labels = arr[:, 0].copy()
    if n and labels.max() >= NUM_CLASSES:
        raise ValueError(f"{path}: label out of range")
    images = arr[:, 1:].reshape(n, 3, IMG_DIM, IMG_DIM).copy()
    return labels, images


def write_batch(path: str | Path, labels: np.ndarray, images: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    images = np.asarray(images, dtype=np.uint8)
    n = len(labels)
    if images.shape != (n, 3, IMG_DIM, IMG_DIM):
        raise ValueError(f"images shape {images.shape} does not match {n} labels")
    if n and labels.max() >= NUM_CLASSES:
        raise ValueError("label out of range")
    out = np.empty((n, RECORD_BYTES), dtype=np.uint8)
    out[:, 0] = labels
    out[:, 1:] = images.reshape(n, 3 * IMG_DIM * IMG_DIM)
    Path(path).write_bytes(out.tobytes())


def random_crop_flip(
    images: np.ndarray, rng: np.random.Generator, pad: int = 4
) -> np.ndarray:
    """Standard per-image augmentation: zero-pad by `pad`, crop at a random
    offset, then horizontally flip with probability 1/2."""
    n, c, h, w = images.shape
    padded = np.pad(images, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.empty_like(images)
    offs = rng.integers(0, 2 * pad + 1, size=(n, 2))
    flips = rng.integers(0, 2, size=n)
    for i in range(n):
        oy, ox = int(offs[i, 0]), int(offs[i, 1])
        crop = padded[i, :, oy : oy + h, ox : ox + w]
        out[i] = crop[:, :, ::-1] if flips[i] else crop
    return out


def hflip_append(labels: np.ndarray, images: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Original records followed by their horizontal mirrors."""
    return (
        np.concatenate([labels, labels]),
        np.concatenate([images, images[:, :, :, ::-1]]),
    )
