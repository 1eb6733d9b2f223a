"""128-bit fixed-point fractions with exact arithmetic modulo 1.

A :class:`FixedFraction` stores a real number in ``[0, 1)`` as the integer
``raw`` with value ``raw / 2**128``.  Sums and integer multiples wrap modulo
``2**128``, which is exactly arithmetic modulo 1 on the stored grid.  All
operations on the raw integers are carried out with Python's arbitrary
precision integers, so no rounding ever occurs inside the mod-1 layer; the
only rounding in the whole pipeline happens when a quantity is finally
converted to a binary64 float.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

BITS = 128
MODULUS = 1 << BITS
MASK = MODULUS - 1
HALF = 1 << (BITS - 1)

_HEX_DIGITS = BITS // 4
_FP_PATTERN = re.compile(r"^fp:0x([0-9a-fA-F]{%d})$" % _HEX_DIGITS)
_SQRT_PATTERN = re.compile(r"^sqrt:(\d+)$")


@dataclass(frozen=True)
class FixedFraction:
    """Fractional part of a real number at 128-bit resolution.

    ``raw`` must lie in ``[0, 2**128)``; the represented value is
    ``raw / 2**128``.
    """

    raw: int

    def __post_init__(self) -> None:
        if not isinstance(self.raw, int):
            raise TypeError(f"raw must be int, got {type(self.raw).__name__}")
        if not 0 <= self.raw < MODULUS:
            raise ValueError(f"raw out of range [0, 2**128): {self.raw}")

    @classmethod
    def from_float(cls, value: float) -> "FixedFraction":
        """Exact conversion of a binary64 value in ``[0, 1)``.

        Doubles below 1 have at most 52 fractional bits past the leading
        one, so ``value * 2**128`` is an integer whenever the exponent is
        >= -76; smaller values are floored onto the grid.
        """
        if not 0.0 <= value < 1.0:
            raise ValueError(f"value must lie in [0, 1): {value!r}")
        num, den = value.as_integer_ratio()
        return cls((num << BITS) // den)

    @classmethod
    def from_fraction(cls, value: Fraction) -> "FixedFraction":
        """Floor of an exact rational in ``[0, 1)`` onto the grid."""
        if not 0 <= value < 1:
            raise ValueError(f"value must lie in [0, 1): {value!r}")
        return cls((value.numerator << BITS) // value.denominator)

    def __add__(self, other: "FixedFraction") -> "FixedFraction":
        return FixedFraction((self.raw + other.raw) & MASK)

    def __sub__(self, other: "FixedFraction") -> "FixedFraction":
        return FixedFraction((self.raw - other.raw) & MASK)

    def scaled(self, n: int) -> "FixedFraction":
        """Return ``n * self`` modulo 1 for a nonnegative integer ``n``."""
        if n < 0:
            raise ValueError(f"scale factor must be nonnegative: {n}")
        return FixedFraction((self.raw * n) & MASK)

    def to_float(self) -> float:
        """Correctly rounded binary64 value (Python int/int division)."""
        return self.raw / MODULUS

    def to_fraction(self) -> Fraction:
        return Fraction(self.raw, MODULUS)

    def hex(self) -> str:
        """Canonical 32-digit hex form, parseable by :func:`parse_real`."""
        return f"fp:0x{self.raw:0{_HEX_DIGITS}x}"

    def __float__(self) -> float:
        return self.to_float()

    def __str__(self) -> str:
        return self.hex()


def nearest_int_dist(frac: FixedFraction) -> float:
    """Distance from ``frac`` to the nearest integer, in ``[0, 1/2]``.

    The min is taken on raw integers, so the comparison is exact; only the
    final division rounds.
    """
    return min(frac.raw, MODULUS - frac.raw) / MODULUS


def nearest_int_dist_raw(raw: int) -> int:
    """Raw-grid distance ``min(raw, 2**128 - raw)`` as an exact integer."""
    return min(raw & MASK, MODULUS - (raw & MASK)) if raw & MASK else 0


def split_real(value: float) -> tuple[int, FixedFraction]:
    """Split a finite double into integer part and fractional part.

    Returns ``(n, f)`` with ``n`` the floor and ``f`` in ``[0, 1)``, e.g.
    ``-0.25`` splits into ``(-1, 0.75)``.  The split is exact whenever the
    fractional bits of ``value`` fit the 128-bit grid, which holds for all
    magnitudes >= 2**-75; tinier fractions are floored onto the grid.
    """
    if not math.isfinite(value):
        raise ValueError(f"value must be finite: {value!r}")
    n = math.floor(value)
    frac = Fraction(value) - n
    return n, FixedFraction.from_fraction(frac)


def parse_real(text: str) -> tuple[int, FixedFraction]:
    """Parse a real-number literal into (integer part, fractional part).

    Accepted forms:

    * plain decimals or rationals understood by :class:`fractions.Fraction`
      (``"0.25"``, ``"-3/7"``, ``"2"``), converted exactly and floored onto
      the 128-bit grid;
    * ``"sqrt:N"`` for the square root of a nonnegative integer, floored
      onto the grid via exact integer square roots;
    * ``"fp:0x<32 hex digits>"`` for a raw fractional value with integer
      part 0.
    """
    text = text.strip()
    m = _FP_PATTERN.match(text)
    if m:
        return 0, FixedFraction(int(m.group(1), 16))
    m = _SQRT_PATTERN.match(text)
    if m:
        n = int(m.group(1))
        whole = math.isqrt(n)
        # floor(sqrt(n) * 2**128) == isqrt(n * 2**256), exactly
        scaled = math.isqrt(n << (2 * BITS))
        return whole, FixedFraction(scaled - (whole << BITS))
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse real literal: {text!r}") from exc
    n = value.numerator // value.denominator
    return n, FixedFraction.from_fraction(value - n)
