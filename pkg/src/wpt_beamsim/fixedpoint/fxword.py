"""16-bit two's-complement fixed point, 13 fractional bits.

Every operation works on Python integers and is bit-exact by construction:
products and quotients are formed at full width, then rounded to nearest
(ties to even) and saturated back to 16 bits. Saturation never raises; it
sets the ``saturated`` flag, which propagates through later operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

WORD_BITS = 16
FRAC_BITS = 13
ONE = 1 << FRAC_BITS
RAW_MAX = (1 << (WORD_BITS - 1)) - 1
RAW_MIN = -(1 << (WORD_BITS - 1))
LSB = 2.0 ** -FRAC_BITS


@dataclass(frozen=True, slots=True)
class FxWord:
    raw: int
    saturated: bool = False

    def __float__(self) -> float:
        return self.raw * LSB

    def __repr__(self) -> str:
        flag = ", saturated" if self.saturated else ""
        return f"FxWord({self.raw} = {float(self):.6g}{flag})"

    @property
    def msb(self) -> int:
        """Sign bit of the 16-bit word."""
        return (self.raw >> (WORD_BITS - 1)) & 1

    def __neg__(self) -> "FxWord":
        return _saturate(-self.raw, self.saturated)

    def __add__(self, other: "FxWord") -> "FxWord":
        return _saturate(self.raw + other.raw, self.saturated or other.saturated)

    def __sub__(self, other: "FxWord") -> "FxWord":
        return _saturate(self.raw - other.raw, self.saturated or other.saturated)

    def __mul__(self, other: "FxWord") -> "FxWord":
        return fx_mul(self, other)

    def __truediv__(self, other: "FxWord") -> "FxWord":
        return fx_div(self, other)


ZERO = FxWord(0)


def _saturate(raw: int, flag: bool = False) -> FxWord:
    if raw > RAW_MAX:
        return FxWord(RAW_MAX, True)
    if raw < RAW_MIN:
        return FxWord(RAW_MIN, True)
    return FxWord(raw, flag)


def round_shift(value: int, shift: int) -> int:
    """``value / 2**shift`` rounded to nearest, ties to even."""
    if shift <= 0:
        return value << -shift
    q = value >> shift
    rem = value - (q << shift)
    half = 1 << (shift - 1)
    if rem > half or (rem == half and q & 1):
        q += 1
    return q


def fx_from_real(x: float) -> FxWord:
    """Quantize with round-to-nearest-even; out-of-range values saturate."""
    if math.isnan(x):
        raise ValueError("cannot quantize NaN")
    if math.isinf(x):
        return FxWord(RAW_MAX if x > 0 else RAW_MIN, True)
    return _saturate(round(x * ONE))  # x * 2**13 is exact, round() ties to even


def fx_to_real(w: FxWord) -> float:
    return w.raw * LSB


def fx_mul(a: FxWord, b: FxWord) -> FxWord:
    return _saturate(round_shift(a.raw * b.raw, FRAC_BITS), a.saturated or b.saturated)


def fx_shift(a: FxWord, bits: int) -> FxWord:
    """Arithmetic shift left (``bits > 0``) or rounded shift right."""
    return _saturate(round_shift(a.raw, -bits), a.saturated)


def nonrestoring_divide(n: int, d: int) -> tuple[int, int]:
    """Unsigned ``divmod(n, d)`` one quotient bit per step, without restoring
    the partial remainder between steps."""
    if d <= 0 or n < 0:
        raise ValueError("nonrestoring_divide needs n >= 0 and d > 0")
    r = 0
    q = 0
    for i in range(max(n.bit_length(), 1) - 1, -1, -1):
        bit = (n >> i) & 1
        r = (r << 1) + bit - d if r >= 0 else (r << 1) + bit + d
        q = (q << 1) | (r >= 0)
    if r < 0:
        r += d
    return q, r


def fx_div(a: FxWord, b: FxWord) -> FxWord:
    """``a / b`` rounded to nearest-even. Division by zero saturates toward the
    sign of ``a``."""
    flag = a.saturated or b.saturated
    if b.raw == 0:
        return FxWord(RAW_MIN if a.raw < 0 else RAW_MAX, True)
    negative = (a.raw < 0) != (b.raw < 0)
    d = abs(b.raw)
    q, r = nonrestoring_divide(abs(a.raw) << FRAC_BITS, d)
    if 2 * r > d or (2 * r == d and q & 1):
        q += 1
    return _saturate(-q if negative else q, flag)


def shift_subtract_sqrt(m: int) -> tuple[int, int]:
    """Integer square root by the binary digit-by-digit method.

    Returns ``(s, m - s*s)`` with ``s = floor(sqrt(m))``.
    """
    if m < 0:
        raise ValueError("square root of a negative integer")
    res = 0
    bit = 1 << ((m.bit_length() // 2) * 2) if m else 0
    rem = m
    while bit:
        if rem >= res + bit:
            rem -= res + bit
            res = (res >> 1) + bit
        else:
            res >>= 1
        bit >>= 2
    return res, rem


def fx_sqrt(a: FxWord) -> FxWord:
    """Square root rounded to nearest; negative inputs clamp to zero and flag."""
    if a.raw < 0:
        return FxWord(0, True)
    s, rem = shift_subtract_sqrt(a.raw << FRAC_BITS)
    # m lies strictly between integers' half-squares, so no ties occur
    if rem > s:
        s += 1
    return _saturate(s, a.saturated)


@dataclass(frozen=True, slots=True)
class FxComplex:
    re: FxWord
    im: FxWord

    @classmethod
    def from_complex(cls, z: complex) -> "FxComplex":
        return cls(fx_from_real(z.real), fx_from_real(z.imag))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    @property
    def saturated(self) -> bool:
        return self.re.saturated or self.im.saturated

    def __add__(self, other: "FxComplex") -> "FxComplex":
        return FxComplex(self.re + other.re, self.im + other.im)

    def __mul__(self, other: "FxComplex") -> "FxComplex":
        # full-width accumulate, one rounding per output component
        flag = self.saturated or other.saturated
        re = self.re.raw * other.re.raw - self.im.raw * other.im.raw
        im = self.re.raw * other.im.raw + self.im.raw * other.re.raw
        return FxComplex(_saturate(round_shift(re, FRAC_BITS), flag),
                         _saturate(round_shift(im, FRAC_BITS), flag))

    def scale(self, k: FxWord) -> "FxComplex":
        return FxComplex(fx_mul(self.re, k), fx_mul(self.im, k))

    def raws(self) -> tuple[int, int]:
        return self.re.raw, self.im.raw
