"""Exact dyadic rationals.

Every price, valuation and regret inside the engine is a ``Dyadic``: an
arbitrary-precision integer mantissa times a power of two.  Sums,
differences and products of dyadics are dyadic, so exploration prices
``q + k * 2**-2**l`` never round, no matter how deep the phase.
"""

from __future__ import annotations

import enum
import math
import sys
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Union

__all__ = [
    "Dyadic",
    "Ordering",
    "ZERO",
    "ONE",
    "from_decimal",
    "from_fraction",
    "combine",
    "compare",
    "to_float",
]

DyadicLike = Union["Dyadic", int]

_HASH_MODULUS = sys.hash_info.modulus
# 2 has multiplicative order 61 modulo the Mersenne prime 2**61 - 1
_HASH_PERIOD = 61 if _HASH_MODULUS == (1 << 61) - 1 else _HASH_MODULUS - 1

# values with exponent below this render as "m*2^e"
_RENDER_MIN_EXPONENT = -64


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


class Dyadic:
    """The number ``mantissa * 2**exponent`` in canonical form.

    Canonical means the mantissa is odd, or the value is zero with
    exponent zero.  Instances are treated as immutable.
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        mantissa = int(mantissa)
        exponent = int(exponent)
        if mantissa == 0:
            exponent = 0
        elif not mantissa & 1:
            tz = (mantissa & -mantissa).bit_length() - 1
            mantissa >>= tz
            exponent += tz
        self.mantissa = mantissa
        self.exponent = exponent

    @classmethod
    def _raw(cls, mantissa: int, exponent: int) -> "Dyadic":
        # caller guarantees canonical form
        obj = object.__new__(cls)
        obj.mantissa = mantissa
        obj.exponent = exponent
        return obj

    @classmethod
    def pow2(cls, exponent: int) -> "Dyadic":
        return cls._raw(1, exponent)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: DyadicLike) -> "Dyadic":
        if type(other) is not Dyadic:
            if isinstance(other, int):
                other = Dyadic(other)
            else:
                return NotImplemented
        a, b = self, other
        if a.mantissa == 0:
            return b
        if b.mantissa == 0:
            return a
        if a.exponent == b.exponent:
            return Dyadic(a.mantissa + b.mantissa, a.exponent)
        if a.exponent > b.exponent:
            a, b = b, a
        # a has the smaller exponent and an odd mantissa, so the sum is odd
        return Dyadic._raw(a.mantissa + (b.mantissa << (b.exponent - a.exponent)), a.exponent)

    __radd__ = __add__

    def __neg__(self) -> "Dyadic":
        return Dyadic._raw(-self.mantissa, self.exponent)

    def __sub__(self, other: DyadicLike) -> "Dyadic":
        if type(other) is not Dyadic:
            if isinstance(other, int):
                other = Dyadic(other)
            else:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other: DyadicLike) -> "Dyadic":
        return Dyadic(other) - self if isinstance(other, int) else NotImplemented

    def __mul__(self, other: DyadicLike) -> "Dyadic":
        if type(other) is not Dyadic:
            if isinstance(other, int):
                other = Dyadic(other)
            else:
                return NotImplemented
        if self.mantissa == 0 or other.mantissa == 0:
            return ZERO
        return Dyadic._raw(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __abs__(self) -> "Dyadic":
        return self if self.mantissa >= 0 else -self

    # -- ordering ---------------------------------------------------------

    def _cmp(self, other: "Dyadic") -> int:
        am, ae, bm, be = self.mantissa, self.exponent, other.mantissa, other.exponent
        if ae == be:
            d = am - bm
        elif ae > be:
            d = (am << (ae - be)) - bm
        else:
            d = am - (bm << (be - ae))
        return (d > 0) - (d < 0)

    def _coerce(self, other):
        if type(other) is Dyadic:
            return other
        if isinstance(other, int):
            return Dyadic(other)
        return None

    def __eq__(self, other) -> bool:
        if type(other) is Dyadic:
            return self.mantissa == other.mantissa and self.exponent == other.exponent
        if isinstance(other, int):
            return self == Dyadic(other)
        if isinstance(other, Fraction):
            return self.as_fraction() == other
        return NotImplemented

    def __hash__(self) -> int:
        # must agree with hash() of the equal int / Fraction
        m, e = self.mantissa, self.exponent
        if e >= 0:
            return hash(m << e)
        h = hash(hash(abs(m)) * pow(2, e % _HASH_PERIOD, _HASH_MODULUS))
        h = h if m >= 0 else -h
        return -2 if h == -1 else h

    def __lt__(self, other) -> bool:
        o = self._coerce(other)
        return NotImplemented if o is None else self._cmp(o) < 0

    def __le__(self, other) -> bool:
        o = self._coerce(other)
        return NotImplemented if o is None else self._cmp(o) <= 0

    def __gt__(self, other) -> bool:
        o = self._coerce(other)
        return NotImplemented if o is None else self._cmp(o) > 0

    def __ge__(self, other) -> bool:
        o = self._coerce(other)
        return NotImplemented if o is None else self._cmp(o) >= 0

    def __bool__(self) -> bool:
        return self.mantissa != 0

    # -- conversions ------------------------------------------------------

    def as_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __float__(self) -> float:
        m, e = self.mantissa, self.exponent
        if m.bit_length() <= 53:
            return math.ldexp(float(m), e)
        return float(self.as_fraction())

    def fraction_str(self) -> str:
        """Render as ``p/q`` (or an integer), e.g. ``3/16``."""
        f = self.as_fraction()
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"

    def __str__(self) -> str:
        m, e = self.mantissa, self.exponent
        if e >= 0:
            return str(m << e)
        if e < _RENDER_MIN_EXPONENT:
            return f"{m}*2^{e}"
        # m / 2^k == m * 5^k / 10^k
        k = -e
        digits = str(abs(m) * 5**k).rjust(k + 1, "0")
        whole, frac = digits[:-k], digits[-k:].rstrip("0")
        sign = "-" if m < 0 else ""
        return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"

    def __repr__(self) -> str:
        return f"Dyadic({self.mantissa}, {self.exponent})"

    def __reduce__(self):
        return (Dyadic, (self.mantissa, self.exponent))


ZERO = Dyadic(0)
ONE = Dyadic(1)


def from_fraction(value: Fraction, frac_bits: int, rounding: str = "nearest") -> Dyadic:
    """Quantize a rational onto the grid ``2**-frac_bits``.

    ``rounding`` is ``"nearest"`` (ties toward zero), ``"up"`` (ceiling)
    or ``"down"`` (floor).
    """
    if frac_bits < 1:
        raise ValueError(f"frac_bits must be >= 1, got {frac_bits}")
    scaled = Fraction(value) * (1 << frac_bits)
    n, d = scaled.numerator, scaled.denominator
    if rounding == "up":
        k = -((-n) // d)
    elif rounding == "down":
        k = n // d
    elif rounding == "nearest":
        mag, rem = divmod(abs(n), d)
        if 2 * rem > d:
            mag += 1
        k = mag if n >= 0 else -mag
    else:
        raise ValueError(f"unknown rounding mode {rounding!r}")
    return Dyadic(k, -frac_bits)


def from_decimal(text: str, frac_bits: int = 64) -> Dyadic:
    """Parse a finite decimal string onto the ``2**-frac_bits`` grid.

    Exact binary fractions that fit in ``frac_bits`` come back exactly;
    everything else goes to the nearest grid point, ties toward zero.
    """
    try:
        dec = Decimal(text.strip())
    except (InvalidOperation, AttributeError):
        raise ValueError(f"not a decimal number: {text!r}") from None
    if not dec.is_finite():
        raise ValueError(f"not a finite decimal: {text!r}")
    return from_fraction(Fraction(dec), frac_bits, "nearest")


def combine(op: str, a: Dyadic, b: Dyadic) -> Dyadic:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def compare(a: Dyadic, b: Dyadic) -> Ordering:
    return Ordering(a._cmp(b))


def to_float(x: Dyadic) -> float:
    return float(x)
