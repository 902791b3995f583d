"""Data augmentation that operates directly on encrypted (or plain) images.

Flips and shifts only move pixel positions, and the pixel cipher keys its
decisions by position, so each transform T satisfies

    T(encrypt(img, K)) == encrypt_with_planes(T(img), remap_planes(planes(K), T))

exactly; remap_planes is the oracle for that commutation.  Randomness
(which flip to take, crop offsets) belongs to the caller, keeping every op
here pure.

Shift fill defaults to 0 (black).  pad_crop implements the standard
zero-pad-then-crop recipe; pad=4 is the usual choice for 32x32 inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .image import PlanarImage
from .keying import KeystreamPlanes


@dataclass(frozen=True)
class ShiftSpec:
    dx: int
    dy: int
    fill: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.fill <= 255):
            raise ValueError("fill must be an 8-bit sample value")


Transform = Union[str, ShiftSpec]  # "hflip" | "vflip" | ShiftSpec


def hflip_array(arr: np.ndarray) -> np.ndarray:
    return arr[..., :, ::-1]


def vflip_array(arr: np.ndarray) -> np.ndarray:
    return arr[..., ::-1, :]


def shift_array(arr: np.ndarray, dx: int, dy: int, fill: int) -> np.ndarray:
    """out(x, y) = in(x - dx, y - dy) where defined, else fill."""
    h, w = arr.shape[-2:]
    if abs(dx) >= w or abs(dy) >= h:
        raise ValueError(f"shift ({dx}, {dy}) out of range for {w}x{h} image")
    out = np.full_like(arr, fill)
    ys = slice(max(0, dy), h + min(0, dy))
    xs = slice(max(0, dx), w + min(0, dx))
    ys_src = slice(max(0, -dy), h - max(0, dy))
    xs_src = slice(max(0, -dx), w - max(0, dx))
    out[..., ys, xs] = arr[..., ys_src, xs_src]
    return out


def pad_crop_array(arr: np.ndarray, pad: int, offset_x: int, offset_y: int) -> np.ndarray:
    if pad < 0:
        raise ValueError("pad must be non-negative")
    if not (0 <= offset_x <= 2 * pad and 0 <= offset_y <= 2 * pad):
        raise ValueError(f"offsets must lie in [0, {2 * pad}]")
    h, w = arr.shape[-2:]
    widths = [(0, 0)] * (arr.ndim - 2) + [(pad, pad), (pad, pad)]
    padded = np.pad(arr, widths, mode="constant", constant_values=0)
    return padded[..., offset_y : offset_y + h, offset_x : offset_x + w]


def apply_array(arr: np.ndarray, transform: Transform) -> np.ndarray:
    if transform == "hflip":
        return hflip_array(arr)
    if transform == "vflip":
        return vflip_array(arr)
    if isinstance(transform, ShiftSpec):
        return shift_array(arr, transform.dx, transform.dy, transform.fill)
    raise ValueError(f"unknown transform {transform!r}")


def hflip(img: PlanarImage) -> PlanarImage:
    """Mirror columns: x -> width-1-x in every channel."""
    return PlanarImage(hflip_array(img.planes))


def vflip(img: PlanarImage) -> PlanarImage:
    """Mirror rows: y -> height-1-y in every channel."""
    return PlanarImage(vflip_array(img.planes))


def shift(img: PlanarImage, spec: ShiftSpec) -> PlanarImage:
    """Translate by (dx, dy), filling vacated positions with spec.fill."""
    return PlanarImage(shift_array(img.planes, spec.dx, spec.dy, spec.fill))


def pad_crop(img: PlanarImage, pad: int, offset_x: int, offset_y: int) -> PlanarImage:
    """Zero-pad by `pad` on all sides, then crop an original-size window at
    (offset_x, offset_y).  Offsets of (pad, pad) give the identity."""
    return PlanarImage(pad_crop_array(img.planes, pad, offset_x, offset_y))


def remap_planes(planes: KeystreamPlanes, transform: Transform) -> KeystreamPlanes:
    """Apply a positional transform to keystream planes themselves.

    Shifted-in positions get bit 0 and shuffle code 0, matching a region
    the cipher leaves untouched.
    """
    if isinstance(transform, ShiftSpec):
        bit_t = ShiftSpec(transform.dx, transform.dy, fill=0)
        bits = shift_array(planes.np_bits, bit_t.dx, bit_t.dy, 0)
        codes = None
        if planes.shuffle_codes is not None:
            codes = shift_array(planes.shuffle_codes, bit_t.dx, bit_t.dy, 0)
    else:
        bits = apply_array(planes.np_bits, transform)
        codes = None
        if planes.shuffle_codes is not None:
            codes = apply_array(planes.shuffle_codes, transform)
    return KeystreamPlanes(np_bits=bits.copy(), shuffle_codes=None if codes is None else codes.copy())
