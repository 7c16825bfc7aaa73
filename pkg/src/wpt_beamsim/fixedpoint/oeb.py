"""Bit-accurate model of the 5-antenna optimal energy beamformer (OEB).

Block-1 holds the circulant basis and collects the five basis-probe
magnitudes. Once all five are in, their squared sum is the squared channel
norm, and Block-1 picks a power-of-two shift that brings that norm into
``[sqrt(2)/2, sqrt(2))``. Every magnitude, stored or arriving later, is
shifted by the same amount, so squares stay below 2 and fourth powers
below 4 and weak channels keep their precision. Block-2 runs the
angle-recovery iterations. The controller is
the phase field of :class:`OebState`; every input is checked against it, and
a magnitude that arrives while the OEB is not waiting for one is rejected.

State transitions are pure functions returning a new :class:`OebState`, so a
run is a fold over the acknowledgement sequence and repeats bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ..errors import ProtocolError
from .cordic import cordic_atan2, cordic_sincos
from .fxword import (FRAC_BITS, ZERO, FxComplex, FxWord, fx_div, fx_from_real, fx_mul, fx_shift,
                     fx_sqrt)

N_ANTENNAS = 5

LOAD_SEED = "LoadSeed"
PROBE_COLUMN = "ProbeColumn"
AWAIT_TAU = "AwaitTau"
ANGLE_ITER = "AngleIter"
DONE = "Done"

W1_SENT = "W1Sent"
W2_SENT = "W2Sent"
UPDATE = "Update"

_E_PHI1 = FxComplex.from_complex(complex(math.cos(math.pi / 4), math.sin(math.pi / 4)))
_E_PHI2 = FxComplex.from_complex(complex(math.cos(7 * math.pi / 4), math.sin(7 * math.pi / 4)))
_TWO_SQRT2 = fx_from_real(2.0 * math.sqrt(2.0))


def circulant_seed(n: int = N_ANTENNAS) -> np.ndarray:
    """First row of a unitary circulant: a Zadoff-Chu sequence scaled to unit norm.

    Its DFT has unit modulus, so the circulant built from it is unitary, and
    every entry has magnitude ``1/sqrt(n)``.
    """
    k = np.arange(n)
    return np.exp(-1j * np.pi * k * (k + 1) / n) / math.sqrt(n)


def circulant_matrix(seed: Sequence) -> list:
    """``Q[i][j] = seed[(i + j) mod n]``: each row and each column is the
    previous one cyclically shifted by one place, and both the first row and
    the first column equal ``seed``."""
    n = len(seed)
    return [[seed[(i + j) % n] for j in range(n)] for i in range(n)]


@dataclass(frozen=True)
class Phase:
    kind: str
    index: int | None = None
    stage: str | None = None

    def __str__(self) -> str:
        if self.kind in (PROBE_COLUMN, AWAIT_TAU):
            return f"{self.kind}({self.index})"
        if self.kind == ANGLE_ITER:
            return f"{self.kind}({self.index},{self.stage})"
        return self.kind


@dataclass(frozen=True)
class OebState:
    phase: Phase = Phase(LOAD_SEED)
    rb1: tuple = ()  # seed row, 5 FxComplex
    rb2: tuple = ()  # 5 columns of 5 FxComplex
    rb3: tuple = ()  # basis magnitudes in arrival order
    w_opt: tuple = ()
    dot_prod: FxWord = ZERO
    alpha1: FxWord = ZERO
    alpha2: FxWord = ZERO
    mu: FxWord = ZERO
    sqrt_mu: FxWord = ZERO
    kappa1: FxWord = ZERO
    kappa2: FxWord = ZERO
    tau_tilde1: FxWord = ZERO
    tau_tilde2: FxWord = ZERO
    gamma_r: FxWord = ZERO
    gamma_i: FxWord = ZERO
    theta: FxWord = ZERO
    output: tuple = ()  # vector currently driven onto the antennas
    skipped: tuple = ()
    scale_shift: int = 0  # left shift applied to every magnitude after Block-1

    @property
    def saturated(self) -> bool:
        words = [self.dot_prod, self.alpha1, self.alpha2, self.mu, self.sqrt_mu, self.kappa1,
                 self.kappa2, self.tau_tilde1, self.tau_tilde2, self.gamma_r, self.gamma_i,
                 self.theta, *self.rb3]
        vectors = [*self.rb1, *self.w_opt, *self.output]
        return any(w.saturated for w in words) or any(c.saturated for c in vectors)

    def output_vector(self) -> np.ndarray:
        return np.array([complex(c) for c in self.output])

    def w_opt_vector(self) -> np.ndarray:
        return np.array([complex(c) for c in self.w_opt])


# ---------------------------------------------------------------------------
# Block-1: seed load, column generation, magnitude collection
# ---------------------------------------------------------------------------

def block1_step(state: OebState, value) -> OebState:
    """Advance Block-1 by one input.

    In ``LoadSeed`` the input is the five seed elements (complex numbers or
    :class:`FxComplex`); RB-1 latches them and RB-2 receives the five
    columns. In ``AwaitTau`` the input is one basis-probe magnitude, routed
    to the next RB-3 slot.
    """
    kind = state.phase.kind
    if kind == LOAD_SEED:
        if isinstance(value, FxWord) or not hasattr(value, "__len__"):
            raise ProtocolError(f"{state.phase} expects the seed elements, got {type(value).__name__}")
        seeds =tuple(s if isinstance(s, FxComplex) else FxComplex.from_complex(complex(s)) for s in value)
        if len(seeds) != N_ANTENNAS:
            raise ProtocolError(f"LoadSeed expects {N_ANTENNAS} seed elements, got {len(seeds)}")
        q = circulant_matrix(seeds)
        columns = tuple(tuple(q[i][j] for i in range(N_ANTENNAS)) for j in range(N_ANTENNAS))
        return replace(state, phase=Phase(PROBE_COLUMN, 0), rb1=seeds, rb2=columns, output=columns[0])
    if kind == AWAIT_TAU:
        if not isinstance(value, FxWord):
            raise ProtocolError(f"{state.phase} expects an FxWord magnitude, got {type(value).__name__}")
        rb3 = state.rb3 + (value,)
        i = state.phase.index
        if i + 1 < N_ANTENNAS:
            return replace(state, rb3=rb3, phase=Phase(PROBE_COLUMN, i + 1), output=state.rb2[i + 1])
        shift = normalizing_shift(rb3)
        rb3 = tuple(fx_shift(t, shift) for t in rb3)
        started = replace(state, rb3=rb3, w_opt=state.rb2[0], dot_prod=rb3[0], scale_shift=shift)
        return _enter_iteration(started, 1)
    raise ProtocolError(f"Block-1 received {type(value).__name__} input in phase {state.phase}")


def normalizing_shift(taus: Sequence[FxWord]) -> int:
    """Largest ``s`` with ``sum(tau^2) * 4^s < 2``, judged on the exact wide
    sum of squares; negative when the magnitudes arrive too large."""
    energy = sum(t.raw * t.raw for t in taus)  # units of 2^-26
    if energy == 0:
        return 0
    limit = 2 << (2 * FRAC_BITS)
    if energy < limit:
        shift = 0
        while (energy << 2 * (shift + 1)) < limit:
            shift += 1
        return shift
    shift = -1
    while energy >= (limit << -2 * shift):
        shift -= 1
    return shift


def transmit(state: OebState) -> OebState:
    """Controller: the column in ``ProbeColumn(i)`` has gone out; wait for its Ack."""
    if state.phase.kind != PROBE_COLUMN:
        raise ProtocolError(f"nothing to transmit in phase {state.phase}")
    return replace(state, phase=Phase(AWAIT_TAU, state.phase.index))


# ---------------------------------------------------------------------------
# Block-2: angle recovery
# ---------------------------------------------------------------------------

def _combine(w: tuple, q: tuple, c1: FxWord, c2: FxWord, rot: FxComplex) -> tuple:
    """``c1 * w + c2 * rot * q`` elementwise."""
    return tuple(a.scale(c1) + (rot * b).scale(c2) for a, b in zip(w, q))


def _enter_iteration(state: OebState, i: int) -> OebState:
    """Load alpha registers for column ``i`` and emit ``w1``; skips degenerate columns."""
    while i < N_ANTENNAS:
        a1, a2 = state.dot_prod, state.rb3[i]
        if a2.raw <= 0:
            state = replace(state, skipped=state.skipped + (i,))
            i += 1
            continue
        if a1.raw <= 0:
            state = replace(state, w_opt=state.rb2[i], dot_prod=a2,
                            skipped=state.skipped + tuple(range(i)))
            i += 1
            continue
        a1_sq, a2_sq = fx_mul(a1, a1), fx_mul(a2, a2)
        mu = a1_sq + a2_sq
        kappa1 = fx_div(fx_mul(a1_sq, a1_sq) + fx_mul(a2_sq, a2_sq), mu)
        kappa2 = fx_div(fx_mul(a1, a2), mu)
        if kappa2.raw <= 0:
            state = replace(state, skipped=state.skipped + (i,))
            i += 1
            continue
        sqrt_mu = fx_sqrt(mu)
        c1, c2 = fx_div(a1, sqrt_mu), fx_div(a2, sqrt_mu)
        w1 = _combine(state.w_opt, state.rb2[i], c1, c2, _E_PHI1)
        return replace(state, phase=Phase(ANGLE_ITER, i, W1_SENT), alpha1=a1, alpha2=a2, mu=mu,
                       sqrt_mu=sqrt_mu, kappa1=kappa1, kappa2=kappa2, output=w1)
    return replace(state, phase=Phase(DONE), output=state.w_opt)


def block2_iteration(state: OebState, tau_tilde: FxWord) -> OebState:
    """Consume one intermediate-probe magnitude.

    After ``w1``'s magnitude, emit ``w2``. After ``w2``'s, solve for the
    coefficient product, run both CORDIC units, pick the rotation whose
    objective has a clear MSB, and update ``w_opt`` and ``dot_prod``.
    """
    ph = state.phase
    if ph.kind != ANGLE_ITER or ph.stage not in (W1_SENT, W2_SENT):
        raise ProtocolError(f"Block-2 received a magnitude in phase {ph}")
    if not isinstance(tau_tilde, FxWord):
        raise ProtocolError(f"{ph} expects an FxWord magnitude, got {type(tau_tilde).__name__}")
    tau_tilde = fx_shift(tau_tilde, state.scale_shift)
    i = ph.index
    q = state.rb2[i]
    c1, c2 = fx_div(state.alpha1, state.sqrt_mu), fx_div(state.alpha2, state.sqrt_mu)
    if ph.stage == W1_SENT:
        w2 = _combine(state.w_opt, q, c1, c2, _E_PHI2)
        return replace(state, phase=Phase(ANGLE_ITER, i, W2_SENT), tau_tilde1=tau_tilde, output=w2)

    state = replace(state, phase=Phase(ANGLE_ITER, i, UPDATE), tau_tilde2=tau_tilde)
    t1_sq, t2_sq = fx_mul(state.tau_tilde1, state.tau_tilde1), fx_mul(tau_tilde, tau_tilde)
    denom = fx_mul(_TWO_SQRT2, state.kappa2)
    # paired so no partial sum can leave the 16-bit range
    gamma_r = fx_div((t1_sq - state.kappa1) + (t2_sq - state.kappa1), denom)
    gamma_i = fx_div(t2_sq - t1_sq, denom)
    if gamma_r.raw == 0 and gamma_i.raw == 0:
        theta = ZERO
    else:
        theta1 = cordic_atan2(-gamma_i, gamma_r)
        theta2 = cordic_atan2(gamma_i, -gamma_r)
        sin1, cos1 = cordic_sincos(theta1)
        objective1 = fx_mul(gamma_r, cos1) - fx_mul(gamma_i, sin1)
        # MSB of the objective selects between the two candidate angles
        theta = theta2 if objective1.msb else theta1
    sin_t, cos_t = cordic_sincos(theta)
    objective = fx_mul(gamma_r, cos_t) - fx_mul(gamma_i, sin_t)
    inner = state.kappa1 + fx_mul(state.kappa2 + state.kappa2, objective)
    dot = fx_sqrt(inner) if inner.raw > 0 else ZERO
    w_new = _combine(state.w_opt, q, c1, c2, FxComplex(cos_t, sin_t))
    state = replace(state, gamma_r=gamma_r, gamma_i=gamma_i, theta=theta, w_opt=w_new, dot_prod=dot)
    return _enter_iteration(state, i + 1)


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------

@dataclass
class CycleRecord:
    step: int
    phase_in: str
    event: str
    value: object
    state: OebState


@dataclass
class OebRun:
    w_opt: np.ndarray
    state: OebState
    records: list = field(default_factory=list)

    @property
    def probe_count(self) -> int:
        return sum(1 for r in self.records if r.event == "transmit")

    @property
    def saturated(self) -> bool:
        return any(r.state.saturated for r in self.records)

    def rows(self) -> list:
        """One flat row per transition; raw register integers only."""
        out = []
        for r in self.records:
            s = r.state
            value = ""
            if isinstance(r.value, FxWord):
                value = str(r.value.raw)
            vec = " ".join(f"{c.re.raw}:{c.im.raw}" for c in s.output)
            w = " ".join(f"{c.re.raw}:{c.im.raw}" for c in s.w_opt)
            out.append({
                "step": r.step, "phase_in": r.phase_in, "event": r.event, "input": value,
                "phase_out": str(s.phase), "output": vec, "w_opt": w,
                "dot_prod": s.dot_prod.raw, "alpha1": s.alpha1.raw, "alpha2": s.alpha2.raw,
                "mu": s.mu.raw, "kappa1": s.kappa1.raw, "kappa2": s.kappa2.raw,
                "tau_tilde1": s.tau_tilde1.raw, "tau_tilde2": s.tau_tilde2.raw,
                "gamma_r": s.gamma_r.raw, "gamma_i": s.gamma_i.raw, "theta": s.theta.raw,
                "scale_shift": s.scale_shift,
                "saturated": int(s.saturated),
            })
        return out

    def write_csv(self, path) -> None:
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)


def run_oeb(oracle, converter: Callable[[float], float], seeds: Sequence | None = None,
            tau_gain: float = 1.0) -> OebRun:
    """Drive the OEB against a probe oracle until ``Done``.

    The block that turns a recharge time into a magnitude sits outside the
    OEB: here it is ``converter`` followed by a power-of-two input gain
    ``tau_gain`` and quantization to 16 bits. A probe that never gets an
    answer reads as zero, which makes the datapath exclude that column.
    """
    if seeds is None:
        seeds = circulant_seed()
    if len(seeds) != N_ANTENNAS:
        raise ProtocolError(f"the OEB supports exactly {N_ANTENNAS} antennas")

    def magnitude(w: np.ndarray) -> FxWord:
        t = oracle.measure(w)
        if not math.isfinite(t):
            return ZERO  # the harvester never answered: nothing to combine
        return fx_from_real(converter(t) * tau_gain)

    state = OebState()
    records = []

    def log(phase_in, event, value):
        records.append(CycleRecord(len(records), phase_in, event, value, state))

    phase_in = str(state.phase)
    state = block1_step(state, seeds)
    log(phase_in, "load_seed", None)
    while state.phase.kind != DONE:
        phase_in = str(state.phase)
        if state.phase.kind == PROBE_COLUMN:
            w = state.output_vector()
            state = transmit(state)
            log(phase_in, "transmit", None)
            tau = magnitude(w)
            phase_in = str(state.phase)
            state = block1_step(state, tau)
            log(phase_in, "ack", tau)
        elif state.phase.kind == ANGLE_ITER:
            log(phase_in, "transmit", None)
            tau = magnitude(state.output_vector())
            state = block2_iteration(state, tau)
            log(phase_in, "ack", tau)
        else:
            raise ProtocolError(f"controller stalled in phase {state.phase}")
    return OebRun(state.w_opt_vector(), state, records)


def nominal_tau_gain(expected_norm: float) -> float:
    """Power-of-two gain that maps a channel norm of ``expected_norm`` into ``[0.5, 1)``."""
    if not expected_norm > 0:
        raise ValueError("expected_norm must be positive")
    return 2.0 ** (-math.floor(math.log2(expected_norm)) - 1)
