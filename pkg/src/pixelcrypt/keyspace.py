"""Key-space arithmetic for the pixel cipher and the nibble-permutation
baseline, plus a desk-scale brute-force demonstrator.

For an n-pixel image the pixel cipher admits 2^(3n) negative-positive
assignments and, with shuffling, 6^n color permutations, i.e. 48^n
composite keystream assignments; the baseline's space is 96! * 2^96.
Values are reported in log2 (bits) because the raw integers are
astronomically large, but the exact big-integer path is kept for
cross-checks.  Note the formulas count keystream assignments; the
effective entropy of the 64-bit seeds themselves is 192 bits (256 with
k_s), which is the other defensible reading of "key space".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cipher_pixel import _PERM_INV
from .image import PlanarImage

TANAKA_POSITIONS = 96

MAX_BRUTE_FORCE = 1 << 20


@dataclass(frozen=True)
class KeySpaceReport:
    n: int
    log2_np: float
    log2_col: float
    log2_total: float
    exact_digits: Optional[int] = None

    def __post_init__(self) -> None:
        if self.log2_np < 0 or self.log2_col < 0 or self.log2_total < 0:
            raise ValueError("log2 sizes must be non-negative")


def pixel_count(width: int, height: int) -> int:
    if width < 1 or height < 1:
        raise ValueError("dimensions must be positive")
    return width * height


def exact_log2(x: int) -> float:
    """log2 of a positive big integer, accurate to far below 1e-6 bits.

    Uses the top 64 bits of x: the truncation error is below 2^-63 / ln 2.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    b = x.bit_length()
    if b <= 53:
        return math.log2(x)
    return (b - 64) + math.log2(x >> (b - 64))


def proposed_keyspace(n: int, with_shuffle: bool, exact: bool = True) -> KeySpaceReport:
    """Key space of the pixel cipher over n pixels, in bits.

    log2_np = 3n; log2_col = n*log2(6) when shuffling is enabled.  With
    exact=True the decimal digit count of the exact integer (48^n or 8^n)
    is included.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    log2_np = 3.0 * n
    log2_col = n * math.log2(6) if with_shuffle else 0.0
    digits = None
    if exact:
        total = (48**n) if with_shuffle else (8**n)
        digits = len(str(total))
    return KeySpaceReport(
        n=n, log2_np=log2_np, log2_col=log2_col, log2_total=log2_np + log2_col, exact_digits=digits
    )


def proposed_exact_log2(n: int, with_shuffle: bool) -> float:
    """log2 of the exact big integer 48^n (or 8^n); cross-check path."""
    return exact_log2((48**n) if with_shuffle else (8**n))


def tanaka_keyspace() -> float:
    """log2(96! * 2^96) in bits, from the exact big-integer factorial."""
    return exact_log2(math.factorial(TANAKA_POSITIONS)) + TANAKA_POSITIONS


def render_lines(report: KeySpaceReport, with_shuffle: bool) -> list[str]:
    """Machine-readable field=value lines, floats to two decimals."""
    lines = [
        f"n={report.n}",
        f"with_shuffle={'true' if with_shuffle else 'false'}",
        f"log2_np={report.log2_np:.2f}",
        f"log2_col={report.log2_col:.2f}",
        f"log2_total={report.log2_total:.2f}",
    ]
    if report.exact_digits is not None:
        lines.append(f"exact_digits={report.exact_digits}")
    tanaka = tanaka_keyspace()
    lines.append(f"tanaka_log2={tanaka:.2f}")
    lines.append(f"proposed_gt_tanaka={'true' if report.log2_total > tanaka else 'false'}")
    return lines


def render_text(report: KeySpaceReport, with_shuffle: bool) -> str:
    """Aligned plain-text rendering of the same report."""
    tanaka = tanaka_keyspace()
    rows = [
        ("pixels (n)", f"{report.n}"),
        ("shuffle step", "enabled" if with_shuffle else "disabled"),
        ("negative-positive bits", f"{report.log2_np:.2f}"),
        ("color-shuffle bits", f"{report.log2_col:.2f}"),
        ("total bits", f"{report.log2_total:.2f}"),
    ]
    if report.exact_digits is not None:
        rows.append(("exact decimal digits", f"{report.exact_digits}"))
    rows.append(("baseline (tanaka) bits", f"{tanaka:.2f}"))
    rows.append(("proposed exceeds baseline", "yes" if report.log2_total > tanaka else "no"))
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)


def toy_brute_force(
    cipher: PlanarImage,
    with_shuffle: bool,
    accept: Callable[[PlanarImage], bool],
    max_candidates: int = MAX_BRUTE_FORCE,
) -> int:
    """Enumerate every keystream assignment for a tiny ciphertext and count
    how many decrypt it to a plaintext the predicate accepts.

    The domain is (48 if with_shuffle else 8)^n over the n <= 4 pixels of
    an image no larger than 2x2; larger domains are rejected.
    """
    n = cipher.width * cipher.height
    if cipher.width > 2 or cipher.height > 2:
        raise ValueError("brute-force demo is limited to images of at most 2x2 pixels")
    per_pixel = 48 if with_shuffle else 8
    domain = per_pixel**n
    if domain > max_candidates:
        raise ValueError(f"candidate domain {domain} exceeds limit {max_candidates}")

    flat = cipher.planes.reshape(3, n)
    if with_shuffle:
        pixel_patterns = list(itertools.product(range(2), range(2), range(2), range(6)))
    else:
        pixel_patterns = [(b0, b1, b2, 0) for b0, b1, b2 in itertools.product(range(2), repeat=3)]

    count = 0
    for assignment in itertools.product(pixel_patterns, repeat=n):
        plain = np.empty((3, n), dtype=np.uint8)
        for i, (br, bg, bb, code) in enumerate(assignment):
            # Invert the cipher: un-shuffle, then un-complement.
            pix = flat[:, i][_PERM_INV[code]] if with_shuffle else flat[:, i]
            bits = np.array([br, bg, bb], dtype=np.uint8)
            plain[:, i] = pix ^ (bits * np.uint8(255))
        if accept(PlanarImage(plain.reshape(3, cipher.height, cipher.width))):
            count += 1
    return count
