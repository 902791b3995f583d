"""Per-pixel image cipher: negative-positive transform plus optional
color-component shuffling.

Step 2 complements a sample (p -> p XOR 255) wherever its channel's
keystream bit is 1, and leaves it untouched otherwise; step 3 permutes each
pixel's (R, G, B) triple by a keyed code in [0, 5].  Both steps preserve
image dimensions, and the composition is exactly invertible.

Sample depth is fixed at 8 bits; other depths are rejected at input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .image import PlanarImage
from .keying import KeySet, KeystreamPlanes, materialize

# Output channel c of a shuffled pixel reads input channel _PERM_SRC[code][c].
# Code 0 is the identity; e.g. code 2 swaps the red and green components.
_PERM_SRC = np.array(
    [
        [0, 1, 2],  # R G B
        [0, 2, 1],  # R B G
        [1, 0, 2],  # G R B
        [1, 2, 0],  # G B R
        [2, 0, 1],  # B R G
        [2, 1, 0],  # B G R
    ],
    dtype=np.int64,
)
_PERM_INV = np.argsort(_PERM_SRC, axis=1)


@dataclass(frozen=True)
class CipherConfig:
    """with_shuffle enables the optional color-shuffle step; it requires a
    KeySet carrying k_s."""

    with_shuffle: bool = False


def _check_dims(arr: np.ndarray, planes: KeystreamPlanes) -> None:
    if arr.shape[-2:] != (planes.height, planes.width):
        raise ValueError(
            f"image dimensions {arr.shape[-2:]} do not match keystream planes "
            f"{(planes.height, planes.width)}"
        )


def negpos_array(arr: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Negative-positive transform of a (..., 3, H, W) uint8 array."""
    return arr ^ (bits * np.uint8(255))


def shuffle_array(arr: np.ndarray, codes: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Per-pixel color permutation of a (..., 3, H, W) uint8 array."""
    table = _PERM_INV if inverse else _PERM_SRC
    src = np.moveaxis(table[codes], -1, 0)  # (3, H, W), values in 0..2
    idx = np.broadcast_to(src, arr.shape)
    return np.take_along_axis(arr, idx, axis=-3)


def negpos_transform(img: PlanarImage, planes: KeystreamPlanes) -> PlanarImage:
    """Apply the negative-positive transform alone (step 2)."""
    _check_dims(img.planes, planes)
    return PlanarImage(negpos_array(img.planes, planes.np_bits))


def color_shuffle(img: PlanarImage, planes: KeystreamPlanes) -> PlanarImage:
    """Apply the per-pixel color permutation alone (step 3)."""
    if planes.shuffle_codes is None:
        raise ValueError("keystream planes carry no shuffle codes")
    _check_dims(img.planes, planes)
    return PlanarImage(shuffle_array(img.planes, planes.shuffle_codes))


def color_unshuffle(img: PlanarImage, planes: KeystreamPlanes) -> PlanarImage:
    """Inverse of color_shuffle for the same planes."""
    if planes.shuffle_codes is None:
        raise ValueError("keystream planes carry no shuffle codes")
    _check_dims(img.planes, planes)
    return PlanarImage(shuffle_array(img.planes, planes.shuffle_codes, inverse=True))


def encrypt_array(
    arr: np.ndarray, planes: KeystreamPlanes, use_shuffle: Optional[bool] = None
) -> np.ndarray:
    """Encrypt a (..., 3, H, W) uint8 array with materialized planes.

    use_shuffle defaults to whether the planes carry shuffle codes.
    """
    _check_dims(arr, planes)
    if use_shuffle is None:
        use_shuffle = planes.shuffle_codes is not None
    out = negpos_array(arr, planes.np_bits)
    if use_shuffle:
        if planes.shuffle_codes is None:
            raise ValueError("shuffle requested but planes carry no shuffle codes")
        out = shuffle_array(out, planes.shuffle_codes)
    return out


def decrypt_array(
    arr: np.ndarray, planes: KeystreamPlanes, use_shuffle: Optional[bool] = None
) -> np.ndarray:
    """Exact inverse of encrypt_array: un-shuffle first, then negative-positive."""
    _check_dims(arr, planes)
    if use_shuffle is None:
        use_shuffle = planes.shuffle_codes is not None
    out = arr
    if use_shuffle:
        if planes.shuffle_codes is None:
            raise ValueError("shuffle requested but planes carry no shuffle codes")
        out = shuffle_array(out, planes.shuffle_codes, inverse=True)
    return negpos_array(out, planes.np_bits)


def encrypt_with_planes(
    img: PlanarImage, planes: KeystreamPlanes, use_shuffle: Optional[bool] = None
) -> PlanarImage:
    return PlanarImage(encrypt_array(img.planes, planes, use_shuffle))


def decrypt_with_planes(
    img: PlanarImage, planes: KeystreamPlanes, use_shuffle: Optional[bool] = None
) -> PlanarImage:
    return PlanarImage(decrypt_array(img.planes, planes, use_shuffle))


def _planes_for(img_h: int, img_w: int, keys: KeySet, cfg: CipherConfig) -> KeystreamPlanes:
    if cfg.with_shuffle and keys.k_s is None:
        raise ValueError("config enables color shuffling but the KeySet has no k_s")
    return materialize(keys, img_w, img_h)


def encrypt(img: PlanarImage, keys: KeySet, cfg: CipherConfig = CipherConfig()) -> PlanarImage:
    """Encrypt: negative-positive transform, then optional color shuffle."""
    planes = _planes_for(img.height, img.width, keys, cfg)
    return encrypt_with_planes(img, planes, use_shuffle=cfg.with_shuffle)


def decrypt(img: PlanarImage, keys: KeySet, cfg: CipherConfig = CipherConfig()) -> PlanarImage:
    """Exact inverse of encrypt under the same KeySet and config."""
    planes = _planes_for(img.height, img.width, keys, cfg)
    return decrypt_with_planes(img, planes, use_shuffle=cfg.with_shuffle)
