"""Shift-add CORDIC units for the 16-bit datapath.

Both units keep guard bits internally and round once at the output. The
vectoring unit normalizes its input pair by a common left shift first, so
small operands keep full precision (a leading-zero count in hardware).
"""

from __future__ import annotations

import math

from ..errors import DegenerateAngleError
from .fxword import FRAC_BITS, ONE, FxWord, _saturate, round_shift

DEFAULT_ITERATIONS = 14
#: Extra fractional bits of the internal angle accumulator.
ANGLE_GUARD = 4
#: Extra fractional bits of the internal x/y registers in rotation mode.
XY_GUARD = 8
#: Bit length the vectoring inputs are normalized to.
VECTOR_NORM_BITS = 24

_ANGLE_FRAC = FRAC_BITS + ANGLE_GUARD
_ATAN_TABLE = tuple(round(math.atan(2.0 ** -i) * (1 << _ANGLE_FRAC)) for i in range(32))
_PI = round(math.pi * (1 << _ANGLE_FRAC))
_HALF_PI = round(math.pi / 2 * (1 << _ANGLE_FRAC))


def cordic_gain_inverse(iterations: int = DEFAULT_ITERATIONS) -> float:
    return math.prod(1.0 / math.sqrt(1.0 + 2.0 ** (-2 * i)) for i in range(iterations))


def gain_constant(iterations: int = DEFAULT_ITERATIONS) -> FxWord:
    """Rotation gain compensation ``prod 1/sqrt(1 + 2^-2i)`` as a 16-bit word."""
    return FxWord(round(cordic_gain_inverse(iterations) * ONE))


def cordic_atan2(y: FxWord, x: FxWord, iterations: int = DEFAULT_ITERATIONS) -> FxWord:
    """Four-quadrant ``atan2(y, x)`` in radians, range ``(-pi, pi]``."""
    if x.raw == 0 and y.raw == 0:
        raise DegenerateAngleError("atan2 of the origin")
    xr, yr = x.raw, y.raw
    shift = VECTOR_NORM_BITS - max(abs(xr), abs(yr)).bit_length()
    xr, yr = xr << shift, yr << shift
    z = 0
    if xr < 0:
        # rotate by pi into the right half-plane
        z = _PI if yr >= 0 else -_PI
        xr, yr = -xr, -yr
    for i in range(iterations):
        if yr > 0:
            xr, yr, z = xr + (yr >> i), yr - (xr >> i), z + _ATAN_TABLE[i]
        elif yr < 0:
            xr, yr, z = xr - (yr >> i), yr + (xr >> i), z - _ATAN_TABLE[i]
        else:
            break
    return _saturate(round_shift(z, ANGLE_GUARD), x.saturated or y.saturated)


def cordic_sincos(theta: FxWord, iterations: int = DEFAULT_ITERATIONS) -> tuple[FxWord, FxWord]:
    """``(sin(theta), cos(theta))`` for ``theta`` in ``[-pi, pi]``."""
    z = theta.raw << ANGLE_GUARD
    negate = False
    if z > _HALF_PI:
        z -= _PI
        negate = True
    elif z < -_HALF_PI:
        z += _PI
        negate = True
    x = gain_constant(iterations).raw << XY_GUARD
    y = 0
    for i in range(iterations):
        if z >= 0:
            x, y, z = x - (y >> i), y + (x >> i), z - _ATAN_TABLE[i]
        else:
            x, y, z = x + (y >> i), y - (x >> i), z + _ATAN_TABLE[i]
    s, c = round_shift(y, XY_GUARD), round_shift(x, XY_GUARD)
    if negate:
        s, c = -s, -c
    return _saturate(s, theta.saturated), _saturate(c, theta.saturated)
