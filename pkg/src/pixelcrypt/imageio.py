"""Byte-exact image and dataset I/O: binary PPM and CIFAR-10 batches.

PPM (magic "P6", maxval 255) is the single-image format because it can be
read and written bit-exactly with no external decoder.  Encrypted datasets
are re-serialized in the unmodified CIFAR-10 binary layout (3073-byte
records: 1 label byte, then 1024 R, 1024 G, 1024 B bytes, row-major) so any
standard loader can consume them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .image import PlanarImage

CIFAR_DIM = 32
RECORD_BYTES = 1 + 3 * CIFAR_DIM * CIFAR_DIM  # 3073
NUM_CLASSES = 10


class FormatError(ValueError):
    """Malformed image or dataset bytes."""


_WHITESPACE = b" \t\r\n\v\f"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Skip whitespace and '#' comments (which run to end of line).
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch in (b"#",):
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch in _WHITESPACE:
            pos += 1
        else:
            break
    if pos >= n:
        raise FormatError("unexpected end of PPM header")
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def read_ppm(data: bytes) -> PlanarImage:
    """Parse a binary PPM; only maxval 255 is accepted."""
    magic, pos = _next_token(data, 0)
    if magic != b"P6":
        raise FormatError(f"bad PPM magic {magic!r} (expected b'P6')")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_token(data, pos)
        try:
            value = int(token)
        except ValueError:
            raise FormatError(f"PPM {name} is not an integer: {token!r}") from None
        fields.append(value)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"unsupported PPM maxval {maxval} (only 255)")
    # Exactly one whitespace byte separates the header from the payload.
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise FormatError("missing whitespace after PPM maxval")
    pos += 1
    payload = data[pos:]
    expected = 3 * width * height
    if len(payload) < expected:
        raise FormatError(f"truncated PPM payload: {len(payload)} of {expected} bytes")
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes after PPM payload")
    return PlanarImage.from_interleaved(width, height, payload)


def write_ppm(img: PlanarImage) -> bytes:
    """Serialize with the canonical header "P6\\n<w> <h>\\n255\\n"."""
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.to_interleaved()


@dataclass(frozen=True, eq=False)
class DatasetBatch:
    """Labeled 32x32 image batch in CIFAR-10 record order."""

    labels: np.ndarray  # (N,) uint8, values in [0, 9]
    images: np.ndarray  # (N, 3, 32, 32) uint8

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.uint8)
        images = np.asarray(self.images, dtype=np.uint8)
        if labels.ndim != 1:
            raise ValueError("labels must be a 1-D array")
        if images.shape != (len(labels), 3, CIFAR_DIM, CIFAR_DIM):
            raise ValueError(
                f"images must have shape (N, 3, {CIFAR_DIM}, {CIFAR_DIM}), got {images.shape}"
            )
        if labels.size and labels.max() >= NUM_CLASSES:
            raise ValueError("labels must lie in [0, 9]")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "images", images)

    def __len__(self) -> int:
        return len(self.labels)

    def records(self) -> Iterator[tuple[int, PlanarImage]]:
        for label, planes in zip(self.labels, self.images):
            yield int(label), PlanarImage(planes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DatasetBatch):
            return NotImplemented
        return bool(
            np.array_equal(self.labels, other.labels)
            and np.array_equal(self.images, other.images)
        )


def read_cifar_batch(data: bytes) -> DatasetBatch:
    """Parse CIFAR-10 binary records, validating length and labels."""
    if len(data) % RECORD_BYTES:
        raise FormatError(
            f"batch length {len(data)} is not a multiple of the {RECORD_BYTES}-byte record size"
        )
    n = len(data) // RECORD_BYTES
    arr = np.frombuffer(data, dtype=np.uint8).reshape(n, RECORD_BYTES)
    labels = arr[:, 0]
    if n and labels.max() >= NUM_CLASSES:
        bad = int(np.argmax(labels >= NUM_CLASSES))
        raise FormatError(f"record {bad}: label {labels[bad]} out of range")
    images = arr[:, 1:].reshape(n, 3, CIFAR_DIM, CIFAR_DIM)
    return DatasetBatch(labels=labels.copy(), images=images.copy())


def write_cifar_batch(batch: DatasetBatch) -> bytes:
    """Byte-exact inverse of read_cifar_batch."""
    n = len(batch)
    out = np.empty((n, RECORD_BYTES), dtype=np.uint8)
    out[:, 0] = batch.labels
    out[:, 1:] = batch.images.reshape(n, 3 * CIFAR_DIM * CIFAR_DIM)
    return out.tobytes()
