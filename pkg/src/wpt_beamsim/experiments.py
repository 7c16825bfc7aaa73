"""Monte-Carlo studies of the feedback-acquisition (FAP) phase.

Every trial draws its own channel from ``trial_seed(base_seed, k)``, so the
same trial index sees the same small-scale fading at every sweep point.
That makes per-trial comparisons across transmit power or distance exact
and the sweep curves smooth. Trials can run in worker processes; results
are always reduced in trial-index order.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .beamformer import FapTrace, find_optimal_beamformer, make_basis
from .channel import ChannelParams, alignment, sample_channel
from .fixedpoint import (cordic_atan2, cordic_sincos, fx_from_real, nominal_tau_gain, run_oeb)
from .errors import ParameterError
from .harvester import (EfficiencyModel, FeedbackConverter, PiecewiseLinearEfficiency,
                        StorageCircuit, invert_time_to_recharge, model_from_dict,
                        time_to_recharge)
from .oracle import SimulatedHarvester
from .rng import trial_seed

THREADS_ENV = "WPT_BEAMSIM_THREADS"
DEFAULT_SEED = 20230


def _float_list(values) -> list:
    return [float(v) for v in values]


@dataclass
class ExperimentConfig:
    """Sweep ranges and fixed settings; defaults reproduce the published setup."""

    transmit_powers_w: list = field(default_factory=lambda: [3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0])
    distances_m: list = field(default_factory=lambda: [3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0])
    rician_factors: list = field(default_factory=lambda: [2.0, 10.0, math.inf])
    n_antennas: list = field(default_factory=lambda: [5, 10])
    transmit_power_w: float = 10.0  # held fixed in the distance sweep
    distance_m: float = 5.0  # held fixed in the power sweep
    pathloss_exponent: float = 3.0
    antenna_gain: float = 1.0
    circuit: StorageCircuit = field(default_factory=StorageCircuit)
    model: EfficiencyModel = field(default_factory=PiecewiseLinearEfficiency)
    time_limit_s: float = 100.0
    trials: int = 1000
    base_seed: int = DEFAULT_SEED
    basis: str = "dft"
    reorder: bool = False

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ParameterError(f"trials must be a positive integer, got {self.trials!r}")
        for name in ("transmit_powers_w", "distances_m", "rician_factors", "n_antennas"):
            if len(getattr(self, name)) == 0:
                raise ParameterError(f"{name} must not be empty")
        if not self.time_limit_s > 0:
            raise ParameterError("time_limit_s must be positive (use inf to disable)")

    def channel(self, n: int, kf: float, pt: float | None = None,
                dist: float | None = None) -> ChannelParams:
        return ChannelParams(
            n_antennas=int(n), rician_factor=float(kf),
            distance_m=self.distance_m if dist is None else float(dist),
            pathloss_exponent=self.pathloss_exponent, antenna_gain=self.antenna_gain,
            transmit_power_w=self.transmit_power_w if pt is None else float(pt))

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "circuit":
                v = dataclasses.asdict(v)
            elif f.name == "model":
                v = v.to_dict()
            elif isinstance(v, list):
                v = [_json_number(x) for x in v]
            else:
                v = _json_number(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ParameterError(f"unknown configuration key {key!r}")
        kwargs = dict(data)
        if "circuit" in kwargs:
            circ = kwargs["circuit"]
            allowed = {f.name for f in dataclasses.fields(StorageCircuit)}
            for key in circ:
                if key not in allowed:
                    raise ParameterError(f"unknown configuration key 'circuit.{key}'")
            kwargs["circuit"] = StorageCircuit(**circ)
        if "model" in kwargs:
            kwargs["model"] = model_from_dict(kwargs["model"])
        for key in ("transmit_powers_w", "distances_m", "rician_factors"):
            if key in kwargs:
                kwargs[key] = [_parse_number(v) for v in kwargs[key]]
        for key in ("time_limit_s", "transmit_power_w", "distance_m"):
            if key in kwargs:
                kwargs[key] = _parse_number(kwargs[key])
        return cls(**kwargs)


def _json_number(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _parse_number(v) -> float:
    if isinstance(v, str):
        return float(v)  # accepts "inf"
    return float(v)


# ---------------------------------------------------------------------------
# Single trial
# ---------------------------------------------------------------------------

@dataclass
class TrialResult:
    slot_t: np.ndarray  # per algorithmic slot, capped at the time limit (NaN if absent)
    slot_p_h: np.ndarray
    duration_s: float
    energy_j: float
    alignment: float
    dot_prod: float
    channel_norm: float
    n_slots: int


def harvested_energy_during_fap(trace: FapTrace, power_of: Callable[[np.ndarray], float] | Sequence[float]) -> float:
    """Energy delivered to the storage circuit over the whole FAP phase.

    ``power_of`` is either a function giving the harvested power for a
    vector or the per-slot harvested powers in trace order.
    """
    if callable(power_of):
        powers = [power_of(s.w) for s in trace.slots]
    else:
        powers = list(power_of)
    return float(sum(p * s.duration for p, s in zip(powers, trace.slots)))


def run_trial(config: ExperimentConfig, params: ChannelParams, trial_index: int) -> TrialResult:
    n = params.n_antennas
    h = sample_channel(params, trial_seed(config.base_seed, trial_index))
    oracle = SimulatedHarvester(h, params, config.circuit, config.model)
    converter = FeedbackConverter(config.circuit, config.model, params)
    w, trace = find_optimal_beamformer(oracle, make_basis(config.basis, n), converter,
                                       time_limit=config.time_limit_s, reorder=config.reorder)
    n_main = 3 * n - 2
    slot_t = np.full(n_main, np.nan)
    slot_p = np.full(n_main, np.nan)
    k = 0
    for slot, p_h in zip(trace.slots, oracle.harvested):
        if slot.label == "timeout-fallback" or k >= n_main:
            continue
        slot_t[k] = min(slot.t_tr, config.time_limit_s)
        slot_p[k] = p_h
        k += 1
    return TrialResult(
        slot_t=slot_t, slot_p_h=slot_p, duration_s=trace.duration,
        energy_j=harvested_energy_during_fap(trace, oracle.harvested),
        alignment=alignment(h, w), dot_prod=trace.dot_prod,
        channel_norm=float(np.linalg.norm(h)), n_slots=len(trace))


def weaken_direction(h: np.ndarray, basis: np.ndarray, column: int, converter: FeedbackConverter,
                     recharge_time_s: float) -> np.ndarray:
    """Rescale one basis coefficient of ``h`` so probing that column takes
    ``recharge_time_s`` seconds; the phase of the coefficient is kept."""
    q = np.asarray(basis)
    zeta = q.conj().T @ np.asarray(h)
    p_h = invert_time_to_recharge(converter.circuit, t=recharge_time_s)
    tau = converter.tau_from_power(p_h)
    phase = zeta[column] / abs(zeta[column]) if abs(zeta[column]) > 0 else 1.0
    zeta[column] = tau * phase
    return q @ zeta


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            raise ParameterError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _trial_chunk(args) -> list:
    config, params, indices = args
    return [run_trial(config, params, i) for i in indices]


def run_trials(config: ExperimentConfig, params: ChannelParams, workers: int | None = None) -> list:
    """All ``config.trials`` trials for one channel setting, in index order."""
    workers = worker_count() if workers is None else workers
    indices = list(range(config.trials))
    if workers <= 1 or config.trials < 2:
        return _trial_chunk((config, params, indices))
    chunks = [indices[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_trial_chunk, [(config, params, c) for c in chunks]))
    results = [None] * config.trials
    for chunk, part in zip(chunks, parts):
        for i, r in zip(chunk, part):
            results[i] = r
    return results


@dataclass
class PointStats:
    mean_duration_s: float
    se_duration_s: float
    mean_energy_j: float
    se_energy_j: float
    mean_alignment: float
    min_alignment: float
    mean_slot_t: np.ndarray
    mean_slot_p_h: np.ndarray
    mean_final_dot: float
    mean_channel_norm: float
    trials: int


def _se(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0


def summarize(results: Sequence[TrialResult]) -> PointStats:
    dur = np.array([r.duration_s for r in results])
    en = np.array([r.energy_j for r in results])
    al = np.array([r.alignment for r in results])
    slot_t = np.vstack([r.slot_t for r in results])
    slot_p = np.vstack([r.slot_p_h for r in results])
    with np.errstate(all="ignore"):
        mean_t = np.nanmean(slot_t, axis=0) if np.any(~np.isnan(slot_t)) else slot_t[0]
        mean_p = np.nanmean(slot_p, axis=0) if np.any(~np.isnan(slot_p)) else slot_p[0]
    return PointStats(
        mean_duration_s=float(dur.mean()), se_duration_s=_se(dur),
        mean_energy_j=float(en.mean()), se_energy_j=_se(en),
        mean_alignment=float(al.mean()), min_alignment=float(al.min()),
        mean_slot_t=mean_t, mean_slot_p_h=mean_p,
        mean_final_dot=float(np.mean([r.dot_prod for r in results])),
        mean_channel_norm=float(np.mean([r.channel_norm for r in results])),
        trials=len(results))


def run_fap_statistics(config: ExperimentConfig, n: int | None = None, kf: float | None = None,
                       pt: float | None = None, dist: float | None = None,
                       workers: int | None = None) -> PointStats:
    """Per-slot mean time-to-recharge and harvested power at one setting.

    Unset arguments take the first entry of the corresponding config list
    (or the fixed transmit power / distance).
    """
    n = config.n_antennas[0] if n is None else n
    kf = config.rician_factors[0] if kf is None else kf
    params = config.channel(n, kf, pt, dist)
    return summarize(run_trials(config, params, workers))


@dataclass
class SweepResult:
    axis_name: str
    axis_values: list
    series: list  # (n_antennas, rician_factor) per series
    points: list  # points[s][k] -> PointStats

    def metric(self, name: str) -> np.ndarray:
        """``(n_series, n_points)`` array of one :class:`PointStats` field."""
        return np.array([[getattr(p, name) for p in row] for row in self.points])

    def series_index(self, n: int, kf: float) -> int:
        return self.series.index((int(n), float(kf)))


def _sweep(config: ExperimentConfig, axis_name: str, axis_values: list, setting, workers) -> SweepResult:
    series = [(int(n), float(kf)) for n in config.n_antennas for kf in config.rician_factors]
    points = []
    for n, kf in series:
        row = []
        for v in axis_values:
            params = setting(n, kf, v)
            row.append(summarize(run_trials(config, params, workers)))
        points.append(row)
    return SweepResult(axis_name, _float_list(axis_values), series, points)


def sweep_transmit_power(config: ExperimentConfig, workers: int | None = None) -> SweepResult:
    return _sweep(config, "transmit_power_w", config.transmit_powers_w,
                  lambda n, kf, v: config.channel(n, kf, pt=v), workers)


def sweep_distance(config: ExperimentConfig, workers: int | None = None) -> SweepResult:
    return _sweep(config, "distance_m", config.distances_m,
                  lambda n, kf, v: config.channel(n, kf, dist=v), workers)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

#: Per-series metrics, in column order. Each series contributes one block of
#: these columns, prefixed ``N{n}_Kf{kf}_``; the axis value comes first.
CSV_METRICS = ("mean_fap_duration_s", "se_fap_duration_s", "mean_energy_j", "se_energy_j",
               "mean_alignment", "min_alignment", "trials")

_METRIC_FIELDS = {"mean_fap_duration_s": "mean_duration_s", "se_fap_duration_s": "se_duration_s"}


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def series_label(n: int, kf: float) -> str:
    return f"N{n}_Kf{_fmt(kf) if math.isfinite(kf) else 'inf'}"


def csv_header(result: SweepResult) -> list:
    header = [result.axis_name]
    for n, kf in result.series:
        header += [f"{series_label(n, kf)}_{m}" for m in CSV_METRICS]
    return header


def write_csv(result: SweepResult, path) -> None:
    """Header row, then one row per axis point; see :data:`CSV_METRICS`."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(csv_header(result))
            for k, v in enumerate(result.axis_values):
                row = [_fmt(v)]
                for series in result.points:
                    p = series[k]
                    row += [_fmt(getattr(p, _METRIC_FIELDS.get(m, m))) for m in CSV_METRICS]
                writer.writerow(row)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write sweep CSV: {exc.strerror}", str(path)) from exc


def summary_dict(result: SweepResult, config: ExperimentConfig) -> dict:
    series = []
    for (n, kf), row in zip(result.series, result.points):
        series.append({
            "n_antennas": n, "rician_factor": _json_number(kf),
            "mean_fap_duration_s": [p.mean_duration_s for p in row],
            "mean_energy_j": [p.mean_energy_j for p in row],
            "mean_alignment": [p.mean_alignment for p in row],
            "mean_slot_t_s": [[_nan_none(x) for x in p.mean_slot_t] for p in row],
            "mean_slot_p_h_w": [[_nan_none(x) for x in p.mean_slot_p_h] for p in row],
        })
    return {"axis": result.axis_name, "axis_values": result.axis_values,
            "config": config.to_dict(), "series": series}


def _nan_none(x):
    return None if math.isnan(x) else float(x)


def write_json(result: SweepResult, config: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(result, config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def efficiency_curves(models: Sequence[EfficiencyModel], p_r_grid) -> dict:
    """Raw harvested-power curves for several efficiency models."""
    grid = _float_list(p_r_grid)
    return {"p_r_w": grid,
            **{m.name: [m.harvested_power(p) for p in grid] for m in models}}


def recharge_time_curve(circuit: StorageCircuit, p_h_grid) -> dict:
    grid = _float_list(p_h_grid)
    return {"p_h_w": grid, "t_tr_s": [time_to_recharge(circuit, p_h=p) for p in grid]}


def write_columns_csv(columns: dict, path) -> None:
    keys = list(columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(keys)
        for row in zip(*(columns[k] for k in keys)):
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Fixed point against floating point
# ---------------------------------------------------------------------------

FIXED_FLOAT_COLUMNS = ("trial", "seed", "float_alignment", "fixed_alignment", "fixed_probes",
                       "fixed_saturated")


def compare_fixed_and_float(params: ChannelParams, trials: int, base_seed: int = DEFAULT_SEED,
                            circuit: StorageCircuit | None = None,
                            model: EfficiencyModel | None = None,
                            time_limit: float = 100.0) -> list:
    """Run the floating-point algorithm and the 16-bit golden model on the
    same channels; one dict per trial (keys :data:`FIXED_FLOAT_COLUMNS`).

    ``time_limit`` applies to the floating-point run only; the datapath has
    no timeout handling and reads a probe that never answers as zero.
    """
    circuit = circuit or StorageCircuit()
    model = model or PiecewiseLinearEfficiency()
    converter = FeedbackConverter(circuit, model, params)
    gain = nominal_tau_gain(math.sqrt(params.n_antennas * params.pathloss))
    basis = make_basis("dft", params.n_antennas)
    rows = []
    for k in range(trials):
        seed = trial_seed(base_seed, k)
        h = sample_channel(params, seed)
        w_float, _ = find_optimal_beamformer(SimulatedHarvester(h, params, circuit, model), basis,
                                             converter, time_limit=time_limit)
        run = run_oeb(SimulatedHarvester(h, params, circuit, model), converter, tau_gain=gain)
        rows.append({"trial": k, "seed": seed, "float_alignment": alignment(h, w_float),
                     "fixed_alignment": alignment(h, run.w_opt), "fixed_probes": run.probe_count,
                     "fixed_saturated": int(run.saturated), "run": run})
    return rows


def cordic_error(samples: int, seed: int = DEFAULT_SEED) -> tuple[float, float]:
    """Worst atan2 and sin/cos errors (radians / absolute) on random inputs,
    measured against double precision on the quantized arguments."""
    rng = np.random.default_rng(seed)
    worst_atan, worst_sc = 0.0, 0.0
    for y, x, theta in zip(rng.uniform(-3.9, 3.9, samples), rng.uniform(-3.9, 3.9, samples),
                           rng.uniform(-math.pi, math.pi, samples)):
        fy, fx = fx_from_real(y), fx_from_real(x)
        if fx.raw or fy.raw:
            ref = math.atan2(float(fy), float(fx))
            got = float(cordic_atan2(fy, fx))
            worst_atan = max(worst_atan, abs(math.remainder(got - ref, 2 * math.pi)))
        ft = fx_from_real(theta)
        s, c = cordic_sincos(ft)
        worst_sc = max(worst_sc, abs(float(s) - math.sin(float(ft))), abs(float(c) - math.cos(float(ft))))
    return worst_atan, worst_sc
