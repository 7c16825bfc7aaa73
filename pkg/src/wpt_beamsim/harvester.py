"""Nonlinear RF-to-DC conversion, R-C charging, and the inverse maps that turn
an observed time-to-recharge back into ``|h^H w|``.

Forward chain::

    |h^H w|  --G P_t |.|^2-->  P_r  --eta(P_r) P_r-->  P_h  --R-C law-->  t_tr

Every arrow is strictly monotone on the operating region, so each one can be
inverted: bisection on a log-spaced bracket for the charging law, a
closed-form per-segment root for the piecewise-linear efficiency, and
bisection for the smooth efficiency models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .channel import ChannelParams
from .errors import ConvergenceError, NonInvertibleError, ParameterError

#: Harvested power at or below this is treated as "no feedback ever".
POWER_FLOOR_W = 1e-12
#: Upper edge of the power bracket used by the inversions.
POWER_CEIL_W = 1e2
INVERSION_RTOL = 1e-10
MAX_BISECTION_ITER = 200


# ---------------------------------------------------------------------------
# Root search
# ---------------------------------------------------------------------------

def bisect_log(f: Callable[[float], float], target: float, lo: float, hi: float,
               increasing: bool, rtol: float = INVERSION_RTOL,
               max_iter: int = MAX_BISECTION_ITER) -> float:
    """Solve ``f(x) = target`` for ``x`` in ``[lo, hi]`` by bisection on ``log x``.

    ``f`` must be monotone on the bracket and the target must lie inside
    ``[f(lo), f(hi)]`` (caller checks). Stops once ``hi / lo - 1 < rtol``.
    """
    a, b = math.log(lo), math.log(hi)
    log_tol = math.log1p(rtol)
    for _ in range(max_iter):
        if b - a <= log_tol:
            return math.exp(0.5 * (a + b))
        m = 0.5 * (a + b)
        fm = f(math.exp(m))
        if (fm < target) == increasing:
            a = m
        else:
            b = m
    raise ConvergenceError(f"log-bisection did not reach rtol={rtol} in {max_iter} iterations")


def bisect_linear(f: Callable[[float], float], target: float, lo: float, hi: float,
                  increasing: bool, xtol: float, max_iter: int = MAX_BISECTION_ITER) -> float:
    """Plain bisection of a monotone ``f`` on ``[lo, hi]`` to absolute width ``xtol``."""
    for _ in range(max_iter):
        if hi - lo <= xtol:
            return 0.5 * (lo + hi)
        m = 0.5 * (lo + hi)
        if (f(m) < target) == increasing:
            lo = m
        else:
            hi = m
    raise ConvergenceError(f"bisection did not reach xtol={xtol} in {max_iter} iterations")


# ---------------------------------------------------------------------------
# Efficiency models
# ---------------------------------------------------------------------------

def _check_power(p_r: float) -> None:
    if not p_r >= 0:
        raise ParameterError(f"received power must be >= 0, got {p_r!r}")


class EfficiencyModel:
    """RF-to-DC conversion ``P_h = eta(P_r) * P_r``.

    Subclasses implement :meth:`efficiency` and :meth:`invert`. The monotone
    region is ``P_r`` in ``(dead_zone_w, max_received_w]``; inversion outside
    its image raises :class:`NonInvertibleError`.
    """

    name = "abstract"
    dead_zone_w = 0.0
    max_received_w = math.inf

    def efficiency(self, p_r: float) -> float:
        raise NotImplementedError

    def harvested_power(self, p_r: float) -> float:
        return self.efficiency(p_r) * p_r

    @property
    def max_harvested_w(self) -> float:
        if math.isinf(self.max_received_w):
            return math.inf
        return self.harvested_power(self.max_received_w)

    def _check_invertible(self, p_h: float) -> None:
        if not p_h > 0:
            raise NonInvertibleError(f"harvested power {p_h!r} has no unique received power")
        if p_h > self.max_harvested_w:
            raise NonInvertibleError(
                f"harvested power {p_h:.6g} W exceeds the monotone range of the "
                f"{self.name} model (max {self.max_harvested_w:.6g} W)")

    def invert(self, p_h: float) -> float:
        """Bisection fallback for smooth models."""
        self._check_invertible(p_h)
        lo = max(self.dead_zone_w, POWER_FLOOR_W * 1e-3)
        hi = self.max_received_w if math.isfinite(self.max_received_w) else POWER_CEIL_W
        if self.harvested_power(lo) >= p_h:
            return lo
        return bisect_log(self.harvested_power, p_h, lo, hi, increasing=True, rtol=1e-14)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantEfficiency(EfficiencyModel):
    """Linear harvester with a fixed conversion efficiency."""

    eta: float = 0.7
    name = "linear"

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ParameterError(f"eta must lie in (0, 1], got {self.eta!r}")

    def efficiency(self, p_r: float) -> float:
        _check_power(p_r)
        return self.eta

    def invert(self, p_h: float) -> float:
        self._check_invertible(p_h)
        return p_h / self.eta

    def to_dict(self) -> dict:
        return {"kind": self.name, "eta": self.eta}


@dataclass(frozen=True)
class PiecewiseLinearEfficiency(EfficiencyModel):
    """Zero below the first threshold, then linear ramps between thresholds,
    constant above the last one.

    With ``thresholds = (p0, p1, p2, p3)`` and ``levels = (e0, e1, e2)`` the
    efficiency ramps 0 -> e0 on ``[p0, p1)``, e0 -> e1 on ``[p1, p2)``,
    e1 -> e2 on ``[p2, p3]`` and stays at ``e2`` beyond ``p3``.
    """

    thresholds: tuple = (1e-6, 1e-5, 1e-4, 1e-3)
    levels: tuple = (0.4, 0.6, 0.65)
    name = "piecewise"

    def __post_init__(self):
        th, lv = tuple(self.thresholds), tuple(self.levels)
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "levels", lv)
        if len(th) != 4 or len(lv) != 3:
            raise ParameterError("piecewise model needs 4 thresholds and 3 levels")
        if not (0 < th[0] < th[1] < th[2] < th[3]):
            raise ParameterError(f"thresholds must be positive and increasing, got {th}")
        if not (0 < lv[0] <= lv[1] <= lv[2] <= 1):
            raise ParameterError(f"levels must be non-decreasing within (0, 1], got {lv}")

    @property
    def dead_zone_w(self) -> float:
        return self.thresholds[0]

    def _segments(self):
        """(start power, end power, efficiency at start, slope) per ramp."""
        p0, p1, p2, p3 = self.thresholds
        e0, e1, e2 = self.levels
        return (
            (p0, p1, 0.0, e0 / (p1 - p0)),
            (p1, p2, e0, (e1 - e0) / (p2 - p1)),
            (p2, p3, e1, (e2 - e1) / (p3 - p2)),
        )

    def efficiency(self, p_r: float) -> float:
        _check_power(p_r)
        if p_r < self.thresholds[0]:
            return 0.0
        if p_r > self.thresholds[3]:
            return self.levels[2]
        for start, end, base, slope in self._segments():
            if p_r < end or end == self.thresholds[3]:
                return base + slope * (p_r - start)
        raise AssertionError("unreachable")

    def invert(self, p_h: float) -> float:
        self._check_invertible(p_h)
        for start, end, base, slope in self._segments():
            if p_h <= self.harvested_power(end):
                # slope * P^2 + (base - slope * start) * P - p_h = 0, positive root
                b = base - slope * start
                disc = math.sqrt(b * b + 4.0 * slope * p_h)
                if b >= 0:
                    return 2.0 * p_h / (b + disc)
                return (disc - b) / (2.0 * slope)
        return p_h / self.levels[2]

    def to_dict(self) -> dict:
        return {"kind": self.name, "thresholds": list(self.thresholds), "levels": list(self.levels)}


@dataclass(frozen=True)
class SigmoidEfficiency(EfficiencyModel):
    """Normalized logistic harvester:
    ``P_h = M (Psi(P_r) - Omega) / (1 - Omega)`` with
    ``Psi(P) = 1 / (1 + exp(-a (P - b)))`` and ``Omega = Psi(0)``.

    Defaults (``a = 150 /W``, ``b = 14 mW``, ``M = 24 mW``) are the usual
    circuit-fitted values for this model. The model saturates at ``M``; the
    invertible region stops at ``max_received_w`` (default ``b + 6/a``).
    """

    a: float = 150.0
    b: float = 0.014
    saturation_w: float = 0.024
    max_received: float | None = None
    name = "sigmoid"

    def __post_init__(self):
        if not (self.a > 0 and self.b >= 0 and self.saturation_w > 0):
            raise ParameterError("sigmoid model needs a > 0, b >= 0, M > 0")
        if self.max_received is not None and not self.max_received > 0:
            raise ParameterError("max_received must be positive")

    @property
    def max_received_w(self) -> float:
        if self.max_received is not None:
            return self.max_received
        return self.b + 6.0 / self.a

    def _omega(self) -> float:
        return 1.0 / (1.0 + math.exp(self.a * self.b))

    def harvested_power(self, p_r: float) -> float:
        _check_power(p_r)
        psi = 1.0 / (1.0 + math.exp(-self.a * (p_r - self.b)))
        # (psi - omega) / (1 - omega) == psi * (1 - exp(-a P)); no cancellation near 0
        return self.saturation_w * psi * -math.expm1(-self.a * p_r)

    def efficiency(self, p_r: float) -> float:
        _check_power(p_r)
        if p_r == 0:
            # limit of P_h / P_r at the origin
            return self.saturation_w * self.a * self._omega()
        return self.harvested_power(p_r) / p_r

    def to_dict(self) -> dict:
        return {"kind": self.name, "a": self.a, "b": self.b, "saturation_w": self.saturation_w,
                "max_received_w": self.max_received}


@dataclass(frozen=True)
class RationalEfficiency(EfficiencyModel):
    """Rational-function harvester in milliwatt units:
    ``P_h[mW] = (a P + b) / (P + c) - b / c`` with ``P = P_r[mW]``.

    ``P_h(0) = 0`` and the curve saturates at ``a - b/c`` mW. It is strictly
    increasing when ``a c > b``. The invertible region stops at
    ``max_received_w`` (default ``20 c`` mW).
    """

    a: float = 2.463
    b: float = 1.635
    c: float = 0.826
    max_received: float | None = None
    name = "rational"

    def __post_init__(self):
        if not (self.c > 0 and self.a * self.c > self.b >= 0):
            raise ParameterError("rational model needs c > 0 and a*c > b >= 0")

    @property
    def max_received_w(self) -> float:
        if self.max_received is not None:
            return self.max_received
        return 20.0 * self.c * 1e-3

    def harvested_power(self, p_r: float) -> float:
        return self.efficiency(p_r) * p_r

    def invert(self, p_h: float) -> float:
        self._check_invertible(p_h)
        x = p_h * 1e3
        return self.c * self.c * x / (self.a * self.c - self.b - self.c * x) * 1e-3

    def efficiency(self, p_r: float) -> float:
        _check_power(p_r)
        # (a c - b) / (c (P + c)), written without the P_h / P_r cancellation
        p = p_r * 1e3
        return (self.a * self.c - self.b) / (self.c * (p + self.c))

    def to_dict(self) -> dict:
        return {"kind": self.name, "a": self.a, "b": self.b, "c": self.c,
                "max_received_w": self.max_received}


MODEL_KINDS = {
    "linear": ConstantEfficiency,
    "piecewise": PiecewiseLinearEfficiency,
    "sigmoid": SigmoidEfficiency,
    "rational": RationalEfficiency,
}


def model_from_dict(spec: dict | str) -> EfficiencyModel:
    """Build a model from ``{"kind": ..., **params}`` or a bare kind name."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    spec = dict(spec)
    kind = spec.pop("kind", "piecewise")
    if kind not in MODEL_KINDS:
        raise ParameterError(f"unknown efficiency model {kind!r}; choose from {sorted(MODEL_KINDS)}")
    if "max_received_w" in spec:
        spec["max_received"] = spec.pop("max_received_w")
    try:
        return MODEL_KINDS[kind](**spec)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {kind!r} model: {exc}") from None


def efficiency(model: EfficiencyModel, p_r: float) -> float:
    return model.efficiency(p_r)


def harvested_power(model: EfficiencyModel, p_r: float) -> float:
    return model.harvested_power(p_r)


def invert_harvested_power(model: EfficiencyModel, p_h: float) -> float:
    """Received power that produces harvested power ``p_h``."""
    return model.invert(p_h)


# ---------------------------------------------------------------------------
# Charging law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StorageCircuit:
    """Series R-C storage fed by a constant-power source.

    Defaults: 100 ohm, 1 mF, recharge from 1.5 mC to 3 mC.
    """

    resistance_ohm: float = 100.0
    capacitance_f: float = 1e-3
    q_initial_c: float = 1.5e-3
    q_max_c: float = 3e-3

    def __post_init__(self):
        if not (self.resistance_ohm > 0 and self.capacitance_f > 0):
            raise ParameterError("R and C must be positive")
        if not (0 <= self.q_initial_c < self.q_max_c):
            raise ParameterError(f"need 0 <= q0 < qm, got q0={self.q_initial_c}, qm={self.q_max_c}")

    @property
    def rc(self) -> float:
        return self.resistance_ohm * self.capacitance_f

    @property
    def stored_energy_per_cycle_j(self) -> float:
        """Capacitor energy gained per recharge, ``(qm^2 - q0^2) / 2C``."""
        return (self.q_max_c ** 2 - self.q_initial_c ** 2) / (2.0 * self.capacitance_f)


def y_aux(q: float, p: float, circuit: StorageCircuit) -> float:
    """``Y(q, P) = (q + sqrt(q^2 + 4 P R C^2))^2 / (4 P R C^2)``."""
    if not p > 0:
        raise ParameterError(f"power must be positive, got {p!r}")
    if not q >= 0:
        raise ParameterError(f"charge must be >= 0, got {q!r}")
    k = 4.0 * p * circuit.resistance_ohm * circuit.capacitance_f ** 2
    return (q + math.sqrt(q * q + k)) ** 2 / k


def _ttr(circuit: StorageCircuit, q_start: float, q_end: float, p_h: float) -> float:
    # hot path of every inversion; arguments already validated
    k = 4.0 * p_h * circuit.resistance_ohm * circuit.capacitance_f ** 2
    y0 = (q_start + math.sqrt(q_start * q_start + k)) ** 2 / k
    y1 = (q_end + math.sqrt(q_end * q_end + k)) ** 2 / k
    return 0.5 * circuit.rc * (math.log(y1 / y0) + (y1 - y0))


def _check_charges(circuit: StorageCircuit, q_start: float, q_end: float) -> None:
    if not (0 <= q_start <= q_end <= circuit.q_max_c * (1 + 1e-12)):
        raise ParameterError(
            f"need 0 <= q_start <= q_end <= qm, got q_start={q_start}, q_end={q_end}, qm={circuit.q_max_c}")


def time_to_recharge(circuit: StorageCircuit, q_start: float | None = None,
                     q_end: float | None = None, p_h: float = 0.0) -> float:
    """Seconds to charge from ``q_start`` to ``q_end`` at constant harvested power.

    ``(RC/2) ln(Y(q_end) e^Y(q_end) / (Y(q_start) e^Y(q_start)))``. Charges
    default to the circuit's ``q0`` and ``qm``. Returns ``math.inf`` when
    ``p_h`` is at or below :data:`POWER_FLOOR_W` (no feedback arrives).
    """
    q_start = circuit.q_initial_c if q_start is None else q_start
    q_end = circuit.q_max_c if q_end is None else q_end
    _check_charges(circuit, q_start, q_end)
    if not p_h > POWER_FLOOR_W:
        return math.inf
    if q_start == q_end:
        return 0.0
    return _ttr(circuit, q_start, q_end, p_h)


def charge_after(circuit: StorageCircuit, q_start: float, p_h: float, t: float) -> float:
    """Charge reached after ``t`` seconds at power ``p_h``, clipped at ``qm``."""
    if not p_h > 0:
        raise ParameterError(f"power must be positive, got {p_h!r}")
    if not t >= 0:
        raise ParameterError(f"elapsed time must be >= 0, got {t!r}")
    qm = circuit.q_max_c
    if not 0 <= q_start < qm:
        raise ParameterError(f"need 0 <= q_start < qm, got {q_start}")
    if t == 0:
        return q_start
    if t >= _ttr(circuit, q_start, qm, p_h):
        return qm
    return bisect_linear(lambda q: _ttr(circuit, q_start, q, p_h), t, q_start, qm,
                         increasing=True, xtol=qm * 1e-15)


def invert_time_to_recharge(circuit: StorageCircuit, q_start: float | None = None,
                            q_end: float | None = None, t: float = math.inf) -> float:
    """Harvested power that charges ``q_start -> q_end`` in exactly ``t`` seconds."""
    q_start = circuit.q_initial_c if q_start is None else q_start
    q_end = circuit.q_max_c if q_end is None else q_end
    if not t > 0:
        raise ParameterError(f"time-to-recharge must be positive, got {t!r}")
    _check_charges(circuit, q_start, q_end)
    if not q_start < q_end:
        raise ParameterError("need q_start < q_end to invert the charging time")
    if t > _ttr(circuit, q_start, q_end, POWER_FLOOR_W):
        raise NonInvertibleError(f"t = {t:.6g} s implies harvested power below {POWER_FLOOR_W} W")
    if t < _ttr(circuit, q_start, q_end, POWER_CEIL_W):
        raise NonInvertibleError(f"t = {t:.6g} s implies harvested power above {POWER_CEIL_W} W")
    return bisect_log(lambda p: _ttr(circuit, q_start, q_end, p), t, POWER_FLOOR_W, POWER_CEIL_W,
                      increasing=False)


# ---------------------------------------------------------------------------
# Full chain
# ---------------------------------------------------------------------------

def abs_dot_from_ttr(circuit: StorageCircuit, model: EfficiencyModel, params: ChannelParams,
                     t: float) -> float:
    """Recover ``|h^H w|`` from one full recharge time ``q0 -> qm``."""
    p_h = invert_time_to_recharge(circuit, t=t)
    return math.sqrt(model.invert(p_h) / params.power_scale)


@dataclass(frozen=True)
class FeedbackConverter:
    """Bundles circuit, efficiency model and link constants so the beamformer
    only ever sees ``tau = converter(t)``."""

    circuit: StorageCircuit = field(default_factory=StorageCircuit)
    model: EfficiencyModel = field(default_factory=PiecewiseLinearEfficiency)
    params: ChannelParams = field(default_factory=ChannelParams)

    def __call__(self, t: float) -> float:
        return self.tau_from_time(t)

    def tau_from_time(self, t: float) -> float:
        return abs_dot_from_ttr(self.circuit, self.model, self.params, t)

    def tau_from_power(self, p_h: float) -> float:
        if p_h <= POWER_FLOOR_W:
            return 0.0
        return math.sqrt(self.model.invert(p_h) / self.params.power_scale)

    def power_from_time(self, t: float, q_start: float | None = None,
                        q_end: float | None = None) -> float:
        return invert_time_to_recharge(self.circuit, q_start, q_end, t)

    def harvested_from_tau(self, tau: float) -> float:
        return self.model.harvested_power(self.params.power_scale * tau * tau)

    def time_from_tau(self, tau: float) -> float:
        return time_to_recharge(self.circuit, p_h=self.harvested_from_tau(tau))
