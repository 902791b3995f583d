"""Planar 8-bit RGB image type shared by every cipher and pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class PlanarImage:
    """H x W x 3 image stored as three channel planes of uint8 samples.

    ``planes`` has shape (3, height, width) in R, G, B order and is made
    read-only on construction; all transforms return new instances.
    """

    planes: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.planes, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise ValueError(f"expected planes of shape (3, H, W), got {arr.shape}")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError("image dimensions must be at least 1x1")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "planes", arr)

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PlanarImage):
            return NotImplemented
        return bool(np.array_equal(self.planes, other.planes))

    def __hash__(self) -> int:
        return hash(self.planes.tobytes())

    @classmethod
    def from_interleaved(cls, width: int, height: int, data: bytes) -> "PlanarImage":
        """Build from RGB-interleaved bytes (RGBRGB..., row-major)."""
        expected = 3 * width * height
        if len(data) != expected:
            raise ValueError(f"expected {expected} bytes, got {len(data)}")
        arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
        return cls(np.moveaxis(arr, 2, 0))

    def to_interleaved(self) -> bytes:
        """Serialize to RGB-interleaved bytes (row-major)."""
        return np.moveaxis(self.planes, 0, 2).tobytes()
