"""Optimal energy beamforming from time-to-recharge feedback.

The channel is expanded in an orthonormal basis, ``h = sum_i zeta_i q_i``.
Probing each ``q_i`` reveals ``|zeta_i|``. The relative phase of each new
coefficient is then recovered from two extra probes of
``(a1 w + e^{j phi} a2 q) / sqrt(a1^2 + a2^2)`` at ``phi = pi/4`` and
``phi = 7 pi/4``, which give two linear equations in the real and imaginary
parts of the coefficient product. In total ``3N - 2`` probes.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (BasisError, ChannelUnreachableError, DegenerateAngleError, NonInvertibleError,
                     DegenerateChannelError, DegenerateCoefficientError, ProbeTimeoutError)
from .harvester import FeedbackConverter, charge_after, invert_time_to_recharge, time_to_recharge
from .oracle import ProbeOracle

PHI_1 = math.pi / 4
PHI_2 = 7 * math.pi / 4
#: A coefficient below this fraction of the other one is treated as zero.
DEGENERATE_RATIO = 1e-6
ORTHONORMAL_TOL = 1e-10

BASIS_PROBE = "basis-probe"
INTERMEDIATE_1 = "intermediate-phi1"
INTERMEDIATE_2 = "intermediate-phi2"
TIMEOUT_FALLBACK = "timeout-fallback"


# ---------------------------------------------------------------------------
# Bases
# ---------------------------------------------------------------------------

def dft_basis(n: int) -> np.ndarray:
    """Unitary DFT matrix; column ``m`` is ``exp(2j pi m k / n) / sqrt(n)``."""
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)


def identity_basis(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def check_orthonormal(basis: np.ndarray, tol: float = ORTHONORMAL_TOL) -> np.ndarray:
    """Return ``basis`` as a complex square array or raise naming the worst column pair."""
    q = np.asarray(basis, dtype=complex)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise BasisError(f"basis must be square, got shape {q.shape}")
    gram = q.conj().T @ q
    err = np.abs(gram - np.eye(q.shape[0]))
    i, j = np.unravel_index(np.argmax(err), err.shape)
    if err[i, j] > tol:
        what = f"column {i} has norm^2 {gram[i, i].real:.12g}" if i == j else \
            f"columns {min(i, j)} and {max(i, j)} have inner product magnitude {abs(gram[i, j]):.3g}"
        raise BasisError(f"basis is not orthonormal: {what} (tolerance {tol})")
    return q


def load_basis_csv(path) -> np.ndarray:
    """Read an ``N x N`` basis stored as ``N`` rows of ``2N`` interleaved re/im values."""
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    arr = np.asarray(rows, dtype=float)
    n = arr.shape[0]
    if arr.ndim != 2 or arr.shape[1] != 2 * n:
        raise BasisError(f"{path}: expected {n} rows of {2 * n} values, got shape {arr.shape}")
    return check_orthonormal(arr[:, 0::2] + 1j * arr[:, 1::2])


def save_basis_csv(basis: np.ndarray, path) -> None:
    q = np.asarray(basis, dtype=complex)
    out = np.empty((q.shape[0], 2 * q.shape[1]))
    out[:, 0::2], out[:, 1::2] = q.real, q.imag
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows([[repr(float(x)) for x in row] for row in out])


def make_basis(kind: str, n: int) -> np.ndarray:
    """``"dft"``, ``"identity"`` or ``"file:PATH"``."""
    if kind == "dft":
        return dft_basis(n)
    if kind == "identity":
        return identity_basis(n)
    if kind.startswith("file:"):
        q = load_basis_csv(kind[5:])
        if q.shape[0] != n:
            raise BasisError(f"basis file has N={q.shape[0]}, expected {n}")
        return q
    raise BasisError(f"unknown basis {kind!r}")


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------

@dataclass
class Slot:
    index: int
    w: np.ndarray
    t_tr: float  # math.inf when the slot timed out
    tau: float
    label: str
    column: int | None = None
    duration: float = 0.0  # time spent transmitting in this slot


@dataclass
class FapTrace:
    """Everything transmitted during one feedback-acquisition phase."""

    slots: list = field(default_factory=list)
    w_opt: np.ndarray | None = None
    dot_prod: float = float("nan")
    taus: np.ndarray | None = None
    permutation: np.ndarray | None = None
    skipped: list = field(default_factory=list)
    unobserved: list = field(default_factory=list)  # columns below the dead zone

    def add(self, w, t, tau, label, column=None, time_limit=math.inf) -> Slot:
        duration = t if math.isfinite(t) else time_limit
        slot = Slot(len(self.slots), np.asarray(w).copy(), t, tau, label, column, duration)
        self.slots.append(slot)
        return slot

    def __len__(self):
        return len(self.slots)

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.slots)

    @property
    def labels(self) -> list:
        return [s.label for s in self.slots]

    def main_slots(self) -> list:
        """The ``3N - 2`` algorithmic slots, without fallback transmissions."""
        return [s for s in self.slots if s.label != TIMEOUT_FALLBACK]


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------

def intermediate_vector(w_cur: np.ndarray, q_next: np.ndarray, alpha1: float, alpha2: float,
                        phi: float) -> np.ndarray:
    """``(alpha1 w_cur + e^{j phi} alpha2 q_next) / sqrt(alpha1^2 + alpha2^2)``.

    Inputs are orthonormal, so the divisor already gives unit norm; the
    extra division by the computed norm removes rounding drift.
    """
    mu = alpha1 * alpha1 + alpha2 * alpha2
    if not mu > 0:
        raise DegenerateCoefficientError("both combination coefficients are zero")
    w = (alpha1 * np.asarray(w_cur) + np.exp(1j * phi) * alpha2 * np.asarray(q_next)) / math.sqrt(mu)
    return w / np.linalg.norm(w)


def combination_constants(alpha1: float, alpha2: float) -> tuple[float, float, float]:
    """``(mu, kappa1, kappa2)`` for one angle-recovery step."""
    mu = alpha1 * alpha1 + alpha2 * alpha2
    if not mu > 0:
        raise DegenerateCoefficientError("both combination coefficients are zero")
    return mu, (alpha1 ** 4 + alpha2 ** 4) / mu, alpha1 * alpha2 / mu


def solve_gammas(tau_tilde1: float, tau_tilde2: float, kappa1: float,
                 kappa2: float) -> tuple[float, float]:
    """Real and imaginary part of the coefficient product from the two
    intermediate probes.

    ``tau1^2 = kappa1 + sqrt(2) kappa2 (gR - gI)`` and
    ``tau2^2 = kappa1 + sqrt(2) kappa2 (gR + gI)``.
    """
    if not kappa2 > 0:
        raise DegenerateCoefficientError(f"kappa2 = {kappa2!r} leaves the system singular")
    s1, s2 = tau_tilde1 * tau_tilde1, tau_tilde2 * tau_tilde2
    denom = 2.0 * math.sqrt(2.0) * kappa2
    return (s1 + s2 - 2.0 * kappa1) / denom, (s2 - s1) / denom


def select_theta(gamma_r: float, gamma_i: float) -> float:
    """Angle maximizing ``gR cos(t) - gI sin(t)``: the argument of ``gR - j gI``."""
    if gamma_r == 0 and gamma_i == 0:
        raise DegenerateAngleError("gamma is zero, every rotation is equally good")
    theta = math.atan2(-gamma_i, gamma_r)
    assert gamma_r * math.cos(theta) - gamma_i * math.sin(theta) > 0
    return theta


def brute_force_theta(h: np.ndarray, w_cur: np.ndarray, q_next: np.ndarray, alpha1: float,
                      alpha2: float, grid_points: int = 4096) -> float:
    """Grid argmax over ``[0, 2 pi)`` of ``|h^H w_theta|``; a test oracle that needs ``h``."""
    thetas = 2 * np.pi * np.arange(grid_points) / grid_points
    w = alpha1 * np.asarray(w_cur)[:, None] + np.exp(1j * thetas)[None, :] * alpha2 * np.asarray(q_next)[:, None]
    vals = np.abs(np.asarray(h).conj() @ w)
    return float(thetas[int(np.argmax(vals))])


def reorder_basis_descending(taus, basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Permute columns so ``taus`` is non-increasing; ties keep their original order."""
    perm = np.argsort(-np.asarray(taus, dtype=float), kind="stable")
    return np.asarray(basis)[:, perm], perm


# ---------------------------------------------------------------------------
# Probing
# ---------------------------------------------------------------------------

def probe_basis(oracle: ProbeOracle, basis: np.ndarray, converter: Callable[[float], float],
                trace: FapTrace | None = None) -> np.ndarray:
    """Probe every column once and return ``tau_i = |h^H q_i|``."""
    q = np.asarray(basis)
    taus = np.empty(q.shape[1])
    for i in range(q.shape[1]):
        t = oracle.measure(q[:, i])
        if not math.isfinite(t):
            raise ProbeTimeoutError(f"no feedback for basis column {i}")
        taus[i] = converter(t)
        if trace is not None:
            trace.add(q[:, i], t, taus[i], BASIS_PROBE, column=i)
    return taus


def _power_at(converter: FeedbackConverter, tau: float, t_full: float | None) -> float:
    if t_full is not None and math.isfinite(t_full):
        return converter.power_from_time(t_full)
    return converter.harvested_from_tau(tau)


def recover_timed_out_tau(converter: FeedbackConverter, time_limit: float, t_res: float,
                          p_fallback: float) -> float:
    """``|h^H w|`` for a vector that left the storage short of full after ``time_limit``.

    The fallback vector with known harvested power ``p_fallback`` finished
    the charge in ``t_res``. That fixes the intermediate charge ``q_s``
    (``t_res = t_tr(q_s, qm)``); the timed-out power then follows from
    ``time_limit = t_tr(q0, q_s)``.
    """
    circuit = converter.circuit
    q0 = circuit.q_initial_c
    t_full = time_to_recharge(circuit, p_h=p_fallback)
    elapsed = t_full - t_res
    if elapsed <= t_full * 1e-12:
        return 0.0
    q_s = charge_after(circuit, q0, p_fallback, elapsed)
    if q_s <= q0:
        return 0.0
    try:
        p_h = invert_time_to_recharge(circuit, q0, q_s, time_limit)
    except NonInvertibleError:
        # the charge gained is round-off: the vector sat in the dead zone
        return 0.0
    return converter.tau_from_power(p_h)


def probe_with_time_limit(oracle: ProbeOracle, basis: np.ndarray, converter: FeedbackConverter,
                          time_limit: float, trace: FapTrace | None = None) -> np.ndarray:
    """Basis probing where a slot may not exceed ``time_limit`` seconds.

    On a timeout the transmitter falls back to the best column probed so far
    and recovers the missing ``tau`` from the residual time. With no such
    column yet it moves on to the next column, whose first (partial)
    measurement supplies the residual time once its own full recharge time
    is known. Columns that cannot be resolved this way are probed again at
    the end, when a reference exists.
    """
    if not math.isfinite(time_limit):
        return probe_basis(oracle, basis, converter, trace)
    q = np.asarray(basis)
    n = q.shape[1]
    trace = trace if trace is not None else FapTrace()
    taus = np.full(n, np.nan)
    full_time = {}  # column -> measured full recharge time
    pending = []  # timed-out columns awaiting a reference measurement
    retry = []

    def best_column():
        known = [j for j in range(n) if not np.isnan(taus[j])]
        return max(known, key=lambda j: taus[j]) if known else None

    def fallback(k):
        # continue with the strongest known vector until feedback arrives
        j = best_column()
        t_res = oracle.measure(q[:, j])
        trace.add(q[:, j], t_res, taus[j], TIMEOUT_FALLBACK, column=j, time_limit=time_limit)
        taus[k] = recover_timed_out_tau(converter, time_limit, t_res,
                                        _power_at(converter, taus[j], full_time.get(j)))
        trace.slots[first_slot[k]].tau = taus[k]

    first_slot = {}
    for i in range(n):
        t = oracle.measure(q[:, i], time_limit)
        if pending:
            # the storage started this slot partially charged: t is a residual time
            label = TIMEOUT_FALLBACK if math.isfinite(t) else BASIS_PROBE
            slot = trace.add(q[:, i], t, math.nan, label, column=i, time_limit=time_limit)
            if not math.isfinite(t):
                pending.append(i)
                first_slot[i] = slot.index
                continue
            t_res = t
            t = oracle.measure(q[:, i], time_limit)
            slot = trace.add(q[:, i], t, math.nan, BASIS_PROBE, column=i, time_limit=time_limit)
            first_slot[i] = slot.index
            if not math.isfinite(t):
                # weak reference; resolve everything later
                retry.extend(pending)
                pending = [i]
                continue
            taus[i] = converter(t)
            slot.tau = taus[i]
            full_time[i] = t
            if len(pending) == 1:
                k = pending[0]
                taus[k] = recover_timed_out_tau(converter, time_limit, t_res,
                                                converter.power_from_time(t))
                trace.slots[first_slot[k]].tau = taus[k]
            else:
                retry.extend(pending)
            pending = []
            continue
        slot = trace.add(q[:, i], t, math.nan, BASIS_PROBE, column=i, time_limit=time_limit)
        first_slot[i] = slot.index
        if math.isfinite(t):
            taus[i] = converter(t)
            slot.tau = taus[i]
            full_time[i] = t
        elif best_column() is not None:
            fallback(i)
        else:
            pending.append(i)

    if best_column() is None:
        raise ChannelUnreachableError("every basis probe exceeded the time limit")
    if pending:
        # storage is still part-charged from the trailing timeouts; drain it
        # with the best column, which also resolves a single pending column
        j = best_column()
        t_res = oracle.measure(q[:, j])
        trace.add(q[:, j], t_res, taus[j], TIMEOUT_FALLBACK, column=j, time_limit=time_limit)
        if len(pending) == 1:
            k = pending[0]
            taus[k] = recover_timed_out_tau(converter, time_limit, t_res,
                                            converter.power_from_time(full_time[j]))
            trace.slots[first_slot[k]].tau = taus[k]
        else:
            retry.extend(pending)
    for k in retry:
        t = oracle.measure(q[:, k], time_limit)
        trace.add(q[:, k], t, math.nan, TIMEOUT_FALLBACK, column=k, time_limit=time_limit)
        if math.isfinite(t):
            taus[k] = converter(t)
            full_time[k] = t
        else:
            fallback(k)
        trace.slots[first_slot[k]].tau = taus[k]
    return taus


def _probe_pair(oracle, converter, trace, w_opt, q_next, a1, a2, column, time_limit, dot):
    """Probe the two intermediate vectors and return their ``tau`` values."""
    taus = []
    for phi, label in ((PHI_1, INTERMEDIATE_1), (PHI_2, INTERMEDIATE_2)):
        w = intermediate_vector(w_opt, q_next, a1, a2, phi)
        t = oracle.measure(w, time_limit)
        slot = trace.add(w, t, math.nan, label, column=column, time_limit=time_limit)
        if math.isfinite(t):
            slot.tau = converter(t)
        elif math.isfinite(time_limit):
            t_res = oracle.measure(w_opt)
            trace.add(w_opt, t_res, dot, TIMEOUT_FALLBACK, time_limit=time_limit)
            slot.tau = recover_timed_out_tau(converter, time_limit, t_res,
                                             converter.harvested_from_tau(dot))
        else:
            raise ProbeTimeoutError(f"no feedback for intermediate vector at column {column}")
        taus.append(slot.tau)
    return taus


def solve_hidden_coefficient(tau_tilde1: float, tau_tilde2: float, dot: float) -> complex:
    """Coefficient of a direction that gave no feedback on its own.

    The intermediate probes used equal weights, so with ``A = dot`` each one
    measured ``|A + g e^{j phi}| = sqrt(2) tau_tilde``, where ``g`` is the
    unknown coefficient referred to the phase of the current beam. The two
    circles meet in a pair of points mirrored about ``Re g = -A/sqrt(2)``;
    a coefficient too weak to be measured directly is the one nearer zero.
    """
    a = dot
    s1, s2 = 2.0 * tau_tilde1 ** 2, 2.0 * tau_tilde2 ** 2
    g_i = (s2 - s1) / (2.0 * math.sqrt(2.0) * a)
    c = g_i * g_i + a * a - 0.5 * (s1 + s2)
    disc = max(2.0 * a * a - 4.0 * c, 0.0)
    # stable form of (-sqrt(2) a + sqrt(disc)) / 2
    g_r = -2.0 * c / (math.sqrt(2.0) * a + math.sqrt(disc))
    return complex(g_r, g_i)


# ---------------------------------------------------------------------------
# Algorithm
# ---------------------------------------------------------------------------

def find_optimal_beamformer(oracle: ProbeOracle, basis: np.ndarray,
                            converter: Callable[[float], float], *,
                            time_limit: float = math.inf, reorder: bool = False,
                            gamma_solver=solve_gammas) -> tuple[np.ndarray, FapTrace]:
    """Recover the matched beamformer from time-to-recharge feedback alone.

    Parameters
    ----------
    oracle
        Anything with ``measure(w, time_limit) -> seconds``.
    basis
        ``N x N`` orthonormal probing basis (columns are probed in order).
    converter
        Maps one full recharge time to ``|h^H w|``; a :class:`FeedbackConverter`
        is required when ``time_limit`` is finite.
    time_limit
        Per-slot limit; ``inf`` disables timeout handling.
    reorder
        Process columns in descending ``tau`` order after probing.
    gamma_solver
        Replacement for :func:`solve_gammas`, used by mutation checks.

    Returns
    -------
    w_opt, trace
        Unit-norm beamformer and the record of every probe.
    """
    q = check_orthonormal(basis)
    n = q.shape[1]
    trace = FapTrace()
    if math.isfinite(time_limit):
        taus = probe_with_time_limit(oracle, q, converter, time_limit, trace)
    else:
        taus = probe_basis(oracle, q, converter, trace)
    trace.taus = taus.copy()
    perm = np.arange(n)
    if reorder:
        q, perm = reorder_basis_descending(taus, q)
        taus = taus[perm]

    # columns whose probe never produced feedback sit below the rectifier dead
    # zone; they are combined last, once the beam is strong
    unseen = {s.column for s in trace.slots
              if s.label == BASIS_PROBE and not math.isfinite(s.t_tr) and s.tau == 0.0}
    if unseen:
        order = ([j for j in range(n) if perm[j] not in unseen]
                 + [j for j in range(n) if perm[j] in unseen])
        q, taus, perm = q[:, order], taus[order], perm[order]
    trace.unobserved = sorted(unseen)
    trace.permutation = perm

    w_opt = q[:, 0].copy()
    dot = float(taus[0])
    for i in range(1, n):
        a1, a2 = dot, float(taus[i])
        col = int(perm[i])
        if col in unseen and a1 > 0:
            # equal split keeps the probes well above the dead zone
            t1, t2 = _probe_pair(oracle, converter, trace, w_opt, q[:, i], a1, a1, col, time_limit, dot)
            g = solve_hidden_coefficient(t1, t2, a1)
            if abs(g) > DEGENERATE_RATIO * a1:
                w_opt = intermediate_vector(w_opt, q[:, i], a1, abs(g), -cmath.phase(g))
                dot = math.hypot(a1, abs(g))
            else:
                trace.skipped.append(col)
            continue
        if a2 <= DEGENERATE_RATIO * a1:
            trace.skipped.append(col)
            continue
        if a1 <= DEGENERATE_RATIO * a2:
            # everything consumed so far is negligible; restart from this column
            trace.skipped.extend(int(perm[j]) for j in range(i) if int(perm[j]) not in trace.skipped)
            w_opt, dot = q[:, i].copy(), a2
            continue
        _, k1, k2 = combination_constants(a1, a2)
        t1, t2 = _probe_pair(oracle, converter, trace, w_opt, q[:, i], a1, a2, col, time_limit, dot)
        g_r, g_i = gamma_solver(t1, t2, k1, k2)
        if g_r == 0 and g_i == 0:
            theta = 0.0
        else:
            theta = select_theta(g_r, g_i)
        w_opt = intermediate_vector(w_opt, q[:, i], a1, a2, theta)
        dot = math.sqrt(max(k1 + 2.0 * k2 * (g_r * math.cos(theta) - g_i * math.sin(theta)), 0.0))

    if dot == 0:
        raise DegenerateChannelError("all probed coefficients are zero")
    trace.w_opt, trace.dot_prod = w_opt, dot
    return w_opt, trace

