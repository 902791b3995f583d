"""Deterministic keyed pseudorandom streams; the only randomness source here.

Every cipher decision is drawn from a SplitMix64 stream.  The generator is
specified by algorithm rather than by library so results are bit-identical
across platforms and languages:

    state' = state + 0x9E3779B97F4A7C15                    (mod 2^64)
    z = state'
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9               (mod 2^64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB               (mod 2^64)
    output = z ^ (z >> 31)

Because the state advance is additive, the i-th output of a stream can be
computed directly from ``seed + (i+1) * 0x9E3779B97F4A7C15`` without
iterating; the vectorized paths below rely on that jump and are tested to
be bit-identical to the iterated recurrence.

Streams are indexed by pixel position (row-major, top-left origin), never
by image content or image index, so every image encrypted under one key
set shares the same per-pixel pattern.
"""

from __future__ import annotations

import re
import secrets
from dataclasses import dataclass
from typing import Optional

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def prng_next(state: int) -> tuple[int, int]:
    """Advance the generator once; returns (new_state, output)."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return state, z ^ (z >> 31)


def _output_at(seed: int, i: int) -> int:
    # (i+1)-th output of the stream seeded with `seed`, via the additive jump.
    z = (seed + (i + 1) * _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def stream_outputs(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Outputs for stream indices start .. start+count-1 as a uint64 array."""
    if count < 0:
        raise ValueError("count must be non-negative")
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(seed & MASK64) + idx * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def np_bit(seed: int, i: int) -> int:
    """Keyed binary decision for pixel index i (LSB of the stream output)."""
    if i < 0:
        raise ValueError("pixel index must be non-negative")
    return _output_at(seed, i) & 1


def shuffle_code(seed: int, i: int) -> int:
    """Keyed color-permutation code in [0, 5] for pixel index i.

    Computed as output mod 6; the modulo bias (2^64 mod 6 != 0) is below
    2^-61 relative and accepted.
    """
    if i < 0:
        raise ValueError("pixel index must be non-negative")
    return _output_at(seed, i) % 6


class Stream:
    """Sequential reader over one keyed output stream."""

    def __init__(self, seed: int) -> None:
        self.seed = seed & MASK64
        self._pos = 0

    def next_u64(self) -> int:
        out = _output_at(self.seed, self._pos)
        self._pos += 1
        return out

    def take(self, count: int) -> np.ndarray:
        """Next `count` outputs as a uint64 array."""
        out = stream_outputs(self.seed, count, start=self._pos)
        self._pos += count
        return out


def derive_permutation(stream: Stream, n: int) -> np.ndarray:
    """Fisher-Yates permutation of 0..n-1 drawn from `stream`.

    Consumes exactly n-1 outputs; index j = output mod (i+1), with the same
    negligible modulo bias as shuffle_code.
    """
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = stream.next_u64() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def uniforms(stream: Stream, count: int) -> np.ndarray:
    """`count` float64 values in [0, 1) from the top 53 bits of each output."""
    return (stream.take(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class KeySet:
    """Secret seeds driving the pixel cipher; k_s present iff color
    shuffling (the optional third encryption step) is enabled."""

    k_r: int
    k_g: int
    k_b: int
    k_s: Optional[int] = None

    def __post_init__(self) -> None:
        for name in ("k_r", "k_g", "k_b", "k_s"):
            v = getattr(self, name)
            if v is None:
                continue
            if not (0 <= v <= MASK64):
                raise ValueError(f"{name} must be an unsigned 64-bit value")

    @property
    def has_shuffle(self) -> bool:
        return self.k_s is not None


def generate_keyset(seed: Optional[int] = None, with_shuffle: bool = False) -> KeySet:
    """Fresh KeySet; a given seed makes the result reproducible (the four
    seeds are the first outputs of the stream seeded with `seed`), otherwise
    system entropy is used."""
    if seed is None:
        draws = [secrets.randbits(64) for _ in range(4)]
    else:
        s = Stream(seed)
        draws = [s.next_u64() for _ in range(4)]
    return KeySet(
        k_r=draws[0],
        k_g=draws[1],
        k_b=draws[2],
        k_s=draws[3] if with_shuffle else None,
    )


_KEY_LINE = re.compile(r"^(KR|KG|KB|KS)=([0-9a-fA-F]{16})$")


def parse_key_file(text: str) -> KeySet:
    """Parse the key file format: one NAME=<16 hex digits> per line.

    Names are KR, KG, KB and optional KS; any other line is rejected.
    """
    values: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _KEY_LINE.match(line)
        if m is None:
            raise ValueError(f"key file line {lineno}: expected NAME=<16 hex digits>, got {line!r}")
        name, hexval = m.groups()
        if name in values:
            raise ValueError(f"key file line {lineno}: duplicate {name}")
        values[name] = int(hexval, 16)
    missing = {"KR", "KG", "KB"} - values.keys()
    if missing:
        raise ValueError(f"key file missing required entries: {sorted(missing)}")
    return KeySet(k_r=values["KR"], k_g=values["KG"], k_b=values["KB"], k_s=values.get("KS"))


def format_key_file(keys: KeySet) -> str:
    lines = [f"KR={keys.k_r:016x}", f"KG={keys.k_g:016x}", f"KB={keys.k_b:016x}"]
    if keys.k_s is not None:
        lines.append(f"KS={keys.k_s:016x}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class KeystreamPlanes:
    """Materialized per-pixel-position cipher decisions.

    ``np_bits`` holds one {0,1} plane per color channel (R, G, B);
    ``shuffle_codes`` holds one plane of integers in [0, 5], or None when
    the shuffle step is disabled.  Fully determined by (KeySet, width,
    height): regeneration is bit-identical.
    """

    np_bits: np.ndarray
    shuffle_codes: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        bits = np.asarray(self.np_bits, dtype=np.uint8)
        if bits.ndim != 3 or bits.shape[0] != 3:
            raise ValueError(f"expected np_bits of shape (3, H, W), got {bits.shape}")
        if bits.shape[1] < 1 or bits.shape[2] < 1:
            raise ValueError("plane dimensions must be at least 1x1")
        if bits.max(initial=0) > 1:
            raise ValueError("np_bits values must be 0 or 1")
        bits = np.ascontiguousarray(bits)
        bits.flags.writeable = False
        object.__setattr__(self, "np_bits", bits)
        if self.shuffle_codes is not None:
            codes = np.asarray(self.shuffle_codes, dtype=np.uint8)
            if codes.shape != bits.shape[1:]:
                raise ValueError(
                    f"shuffle_codes shape {codes.shape} does not match planes {bits.shape[1:]}"
                )
            if codes.max(initial=0) > 5:
                raise ValueError("shuffle codes must lie in [0, 5]")
            codes = np.ascontiguousarray(codes)
            codes.flags.writeable = False
            object.__setattr__(self, "shuffle_codes", codes)

    @property
    def height(self) -> int:
        return self.np_bits.shape[1]

    @property
    def width(self) -> int:
        return self.np_bits.shape[2]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KeystreamPlanes):
            return NotImplemented
        if not np.array_equal(self.np_bits, other.np_bits):
            return False
        if (self.shuffle_codes is None) != (other.shuffle_codes is None):
            return False
        if self.shuffle_codes is None:
            return True
        return bool(np.array_equal(self.shuffle_codes, other.shuffle_codes))

    @classmethod
    def constant(
        cls, width: int, height: int, bit: int, code: Optional[int] = None
    ) -> "KeystreamPlanes":
        """Test-only hook: planes with every bit forced to `bit` (and every
        shuffle code to `code` when given).  Production paths always derive
        planes from keys via materialize()."""
        bits = np.full((3, height, width), bit, dtype=np.uint8)
        codes = None if code is None else np.full((height, width), code, dtype=np.uint8)
        return cls(np_bits=bits, shuffle_codes=codes)


def materialize(keys: KeySet, width: int, height: int) -> KeystreamPlanes:
    """Materialize keystream planes for a width x height pixel grid.

    Pixel index i = y * width + x (row-major).  Bit plane c is the LSB
    stream of seed c; the shuffle-code plane (present iff keys.k_s is set)
    is the mod-6 stream of k_s.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be at least 1")
    n = width * height
    bits = np.empty((3, height, width), dtype=np.uint8)
    for c, seed in enumerate((keys.k_r, keys.k_g, keys.k_b)):
        outs = stream_outputs(seed, n)
        bits[c] = (outs & np.uint64(1)).astype(np.uint8).reshape(height, width)
    codes = None
    if keys.k_s is not None:
        outs = stream_outputs(keys.k_s, n)
        codes = (outs % np.uint64(6)).astype(np.uint8).reshape(height, width)
    return KeystreamPlanes(np_bits=bits, shuffle_codes=codes)
