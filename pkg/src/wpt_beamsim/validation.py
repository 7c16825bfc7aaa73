"""Self-checks that exercise the invariants of every module.

Each check returns a :class:`CheckResult`; ``run_checks`` runs them all.
They are cheap enough to run from the command line (``validate``) and
double as a smoke test for a fresh install.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .beamformer import (brute_force_theta, combination_constants, dft_basis, find_optimal_beamformer,
                         intermediate_vector, probe_basis, select_theta, solve_gammas, PHI_1, PHI_2)
from .channel import ChannelParams, abs_dot, alignment, sample_channel
from .harvester import (MODEL_KINDS, FeedbackConverter, StorageCircuit, invert_time_to_recharge,
                        time_to_recharge)
from .oracle import SimulatedHarvester
from .rng import make_generator, trial_seed

THETA_GRID = 4096


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<22} {self.detail}"


def _random_unit_pair(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal complex vectors of length ``n``."""
    a = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    q, _ = np.linalg.qr(a)
    return q[:, 0], q[:, 1]


def check_recharge_roundtrip(circuit: StorageCircuit = StorageCircuit(), points: int = 400) -> CheckResult:
    worst = 0.0
    for p in np.logspace(-9, 0, points):
        t = time_to_recharge(circuit, p_h=float(p))
        worst = max(worst, abs(invert_time_to_recharge(circuit, t=t) / p - 1.0))
    return CheckResult("recharge-roundtrip", worst <= 1e-9, f"max rel err {worst:.2e} (limit 1e-9)")


def check_efficiency_roundtrip(points: int = 400) -> CheckResult:
    worst, where = 0.0, ""
    for kind, cls in MODEL_KINDS.items():
        model = cls()
        lo = max(model.dead_zone_w * 1.001, 1e-9)
        hi = min(model.max_received_w, 10.0)
        for p_r in np.logspace(math.log10(lo), math.log10(hi), points):
            p_h = model.harvested_power(float(p_r))
            err = abs(model.invert(p_h) / p_r - 1.0)
            if err > worst:
                worst, where = err, kind
    return CheckResult("efficiency-roundtrip", worst <= 1e-9,
                       f"max rel err {worst:.2e} ({where or 'all models'}, limit 1e-9)")


def check_monotonicity(circuit: StorageCircuit = StorageCircuit(), points: int = 400) -> CheckResult:
    powers = np.logspace(-9, 0, points)
    times = [time_to_recharge(circuit, p_h=float(p)) for p in powers]
    ok = all(b < a for a, b in zip(times, times[1:]))
    bad = []
    for kind, cls in MODEL_KINDS.items():
        model = cls()
        grid = np.linspace(model.dead_zone_w, min(model.max_received_w, 10.0), points)
        out = [model.harvested_power(float(p)) for p in grid]
        if not all(b >= a for a, b in zip(out, out[1:])):
            bad.append(kind)
    ok = ok and not bad
    detail = "t_tr strictly decreasing, P_h non-decreasing" if ok else f"violated by {bad or 't_tr'}"
    return CheckResult("monotonicity", ok, detail)


def check_parseval(trials: int, seed: int = 1) -> CheckResult:
    worst = 0.0
    for k in range(trials):
        n = 5 if k % 2 == 0 else 10
        params = ChannelParams(n_antennas=n, rician_factor=2.0)
        h = sample_channel(params, trial_seed(seed, k))
        taus = probe_basis(SimulatedHarvester(h, params), dft_basis(n), FeedbackConverter(params=params))
        worst = max(worst, abs(float(np.sum(taus ** 2)) / float(np.vdot(h, h).real) - 1.0))
    return CheckResult("parseval", worst <= 1e-8, f"max rel err {worst:.2e} over {trials} channels")


def check_theta_oracle(trials: int, seed: int = 2,
                       gamma_solver: Callable = solve_gammas) -> CheckResult:
    """Closed-form angle vs a grid search that is allowed to look at ``h``."""
    rng = make_generator(seed)
    step = 2 * math.pi / THETA_GRID
    worst = 0.0
    for _ in range(trials):
        w, q = _random_unit_pair(rng, 4)
        zeta = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        h = zeta[0] * w + zeta[1] * q
        a1, a2 = abs(zeta[0]), abs(zeta[1])
        _, k1, k2 = combination_constants(a1, a2)
        t1 = abs_dot(h, intermediate_vector(w, q, a1, a2, PHI_1))
        t2 = abs_dot(h, intermediate_vector(w, q, a1, a2, PHI_2))
        theta = select_theta(*gamma_solver(t1, t2, k1, k2))
        ref = brute_force_theta(h, w, q, a1, a2, THETA_GRID)
        gap = abs(math.remainder(theta - ref, 2 * math.pi))
        worst = max(worst, gap)
    return CheckResult("theta-oracle", worst <= step,
                       f"max gap {worst:.2e} rad over {trials} instances (limit 2pi/{THETA_GRID})")


def check_slot_count(trials: int, seed: int = 3) -> CheckResult:
    wrong = []
    for n in (5, 10):
        params = ChannelParams(n_antennas=n, rician_factor=2.0)
        for k in range(trials):
            h = sample_channel(params, trial_seed(seed, k))
            _, trace = find_optimal_beamformer(SimulatedHarvester(h, params), dft_basis(n),
                                               FeedbackConverter(params=params))
            if len(trace) != 3 * n - 2:
                wrong.append((n, k, len(trace)))
    detail = "13 slots for N=5, 28 for N=10" if not wrong else f"wrong lengths {wrong[:3]}"
    return CheckResult("slot-count", not wrong, detail)


def check_recovery(trials: int, seed: int = 4) -> CheckResult:
    worst = 1.0
    for k in range(trials):
        n = 5 if k % 2 == 0 else 10
        params = ChannelParams(n_antennas=n, rician_factor=2.0 if k % 4 < 2 else 10.0)
        h = sample_channel(params, trial_seed(seed, k))
        w, _ = find_optimal_beamformer(SimulatedHarvester(h, params), dft_basis(n),
                                       FeedbackConverter(params=params))
        worst = min(worst, alignment(h, w))
    return CheckResult("recovery", worst >= 1 - 1e-7, f"min alignment {worst:.10f} over {trials} channels")


def run_checks(quick: bool = False, gamma_solver: Callable = solve_gammas) -> list[CheckResult]:
    trials = 50 if quick else 500
    return [
        check_recharge_roundtrip(),
        check_efficiency_roundtrip(),
        check_monotonicity(),
        check_parseval(trials),
        check_theta_oracle(trials * 2, gamma_solver=gamma_solver),
        check_slot_count(trials // 5),
        check_recovery(trials),
    ]


def flipped_gamma_solver(tau_tilde1, tau_tilde2, kappa1, kappa2):
    """Mutant with the sign of the imaginary part reversed, to show the
    angle check catches that mistake."""
    g_r, g_i = solve_gammas(tau_tilde1, tau_tilde2, kappa1, kappa2)
    return g_r, -g_i
