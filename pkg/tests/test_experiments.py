import csv
import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from wpt_beamsim import experiments as ex
from wpt_beamsim.beamformer import FapTrace, dft_basis, find_optimal_beamformer
from wpt_beamsim.channel import ChannelParams, sample_channel
from wpt_beamsim.errors import ParameterError
from wpt_beamsim.harvester import FeedbackConverter, StorageCircuit
from wpt_beamsim.oracle import SimulatedHarvester


def small_config(**kw):
    base = dict(transmit_powers_w=[3.0, 6.0, 10.0], distances_m=[3.0, 6.0], rician_factors=[2.0, math.inf],
                n_antennas=[5], trials=40, base_seed=7)
    base.update(kw)
    return ex.ExperimentConfig(**base)


# -- energy ------------------------------------------------------------------------

def test_energy_of_one_slot():
    trace = FapTrace()
    trace.add(np.ones(1), 10.0, 1.0, "basis-probe")
    assert ex.harvested_energy_during_fap(trace, [1e-3]) == pytest.approx(0.01, rel=1e-15)
    assert ex.harvested_energy_during_fap(trace, lambda w: 1e-3) == pytest.approx(0.01, rel=1e-15)


def test_energy_of_empty_trace():
    assert ex.harvested_energy_during_fap(FapTrace(), []) == 0.0


def test_energy_matches_charge_balance():
    """Each full slot stores (qm^2 - q0^2)/2C in the capacitor and burns the
    rest in the resistor."""
    circuit = StorageCircuit()
    params = ChannelParams(n_antennas=5)
    h = sample_channel(params, 17)
    oracle = SimulatedHarvester(h, params)
    _, trace = find_optimal_beamformer(oracle, dft_basis(5), FeedbackConverter(params=params))
    r, c = circuit.resistance_ohm, circuit.capacitance_f

    def resistor_loss(p):
        i = lambda q: 2 * p / (q / c + math.sqrt((q / c) ** 2 + 4 * p * r))  # noqa: E731
        return quad(lambda q: i(q) * r, circuit.q_initial_c, circuit.q_max_c, epsrel=1e-12)[0]

    expected = sum(circuit.stored_energy_per_cycle_j + resistor_loss(p) for p in oracle.harvested)
    assert ex.harvested_energy_during_fap(trace, oracle.harvested) == pytest.approx(expected, rel=1e-9)


# -- configuration --------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ParameterError):
        ex.ExperimentConfig(trials=0)
    with pytest.raises(ParameterError):
        ex.ExperimentConfig(distances_m=[])


def test_config_dict_round_trip():
    config = small_config(time_limit_s=math.inf)
    data = json.loads(json.dumps(config.to_dict()))
    assert data["rician_factors"] == [2.0, "inf"]
    assert ex.ExperimentConfig.from_dict(data) == config


def test_config_rejects_unknown_keys_by_name():
    with pytest.raises(ParameterError, match="'n_antenna'"):
        ex.ExperimentConfig.from_dict({"n_antenna": [5]})
    with pytest.raises(ParameterError, match="'circuit.inductance'"):
        ex.ExperimentConfig.from_dict({"circuit": {"inductance": 1.0}})


# -- per-slot statistics ------------------------------------------------------------------

def test_slot_statistics_shape_and_ordering():
    stats = ex.run_fap_statistics(small_config(trials=200), n=5, kf=2.0, pt=10.0, dist=5.0)
    assert stats.mean_slot_t.shape == (13,)
    assert stats.mean_slot_p_h[-1] >= stats.mean_slot_p_h[:5].max()
    assert np.all(stats.mean_slot_t <= 100.0)
    assert stats.mean_final_dot == pytest.approx(stats.mean_channel_norm, rel=1e-6)
    assert stats.trials == 200


def test_line_of_sight_has_no_spread():
    stats = ex.run_fap_statistics(small_config(), n=5, kf=math.inf)
    assert stats.se_duration_s == pytest.approx(0.0, abs=1e-12)
    assert stats.se_energy_j == pytest.approx(0.0, abs=1e-18)
    assert stats.mean_slot_p_h[-1] >= stats.mean_slot_p_h[:-1].max()


def test_path_loss_scaling():
    config = small_config()
    near, far = config.channel(5, 2.0, dist=3.0), config.channel(5, 2.0, dist=6.0)
    assert near.pathloss / far.pathloss == pytest.approx(8.0, rel=1e-12)


def test_doubling_trials_is_statistically_consistent():
    a = ex.run_fap_statistics(small_config(trials=300), n=5, kf=2.0)
    b = ex.run_fap_statistics(small_config(trials=600), n=5, kf=2.0)
    assert abs(a.mean_duration_s - b.mean_duration_s) < 3 * a.se_duration_s


# -- sweeps ----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def power_sweep():
    config = small_config()
    return config, ex.sweep_transmit_power(config)


def test_power_sweep_trends(power_sweep):
    _, result = power_sweep
    duration = result.metric("mean_duration_s")
    energy = result.metric("mean_energy_j")
    assert np.all(np.diff(duration, axis=1) < 0)
    assert np.all(np.diff(energy, axis=1) > 0)
    assert np.all(np.isfinite(duration)) and np.all(energy >= 0)


def test_distance_sweep_trend():
    result = ex.sweep_distance(small_config())
    assert np.all(np.diff(result.metric("mean_duration_s"), axis=1) >= 0)


def test_parallel_equals_sequential():
    config = small_config(trials=12)
    params = config.channel(5, 2.0)
    seq = ex.run_trials(config, params, workers=1)
    par = ex.run_trials(config, params, workers=3)
    assert [r.duration_s for r in seq] == [r.duration_s for r in par]
    assert [r.energy_j for r in seq] == [r.energy_j for r in par]


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.delenv(ex.THREADS_ENV, raising=False)
    assert ex.worker_count() == 1
    monkeypatch.setenv(ex.THREADS_ENV, "many")
    with pytest.raises(ParameterError):
        ex.worker_count()


# -- output ------------------------------------------------------------------------------

def test_csv_layout_and_round_trip(power_sweep, tmp_path):
    config, result = power_sweep
    path = tmp_path / "sweep.csv"
    ex.write_csv(result, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + len(result.axis_values)
    header = rows[0]
    assert header[0] == "transmit_power_w"
    assert header[1:8] == [f"N5_Kf2.0_{m}" for m in ex.CSV_METRICS]
    assert header[8] == "N5_Kfinf_mean_fap_duration_s"
    duration = result.metric("mean_duration_s")
    for k, row in enumerate(rows[1:]):
        assert float(row[0]) == result.axis_values[k]
        for s in range(len(result.series)):
            block = row[1 + s * 7:1 + (s + 1) * 7]
            assert float(block[0]) == pytest.approx(duration[s, k], rel=1e-12)
            assert int(block[6]) == config.trials


def test_two_points_give_three_lines(tmp_path):
    result = ex.sweep_distance(small_config(trials=3, rician_factors=[2.0]))
    ex.write_csv(result, tmp_path / "d.csv")
    assert len((tmp_path / "d.csv").read_text().splitlines()) == 3


def test_outputs_are_byte_identical_on_rerun(tmp_path):
    config = small_config(trials=10)
    for name in ("a", "b"):
        result = ex.sweep_transmit_power(config)
        ex.write_csv(result, tmp_path / f"{name}.csv")
        ex.write_json(result, config, tmp_path / f"{name}.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    summary = json.loads((tmp_path / "a.json").read_text())
    assert summary["config"]["trials"] == 10
    assert len(summary["series"][0]["mean_slot_t_s"][0]) == 13


def test_csv_write_failure_names_the_path(power_sweep, tmp_path):
    _, result = power_sweep
    target = tmp_path / "missing" / "sweep.csv"
    with pytest.raises(OSError, match="missing"):
        ex.write_csv(result, target)


def test_curve_samples(tmp_path):
    from wpt_beamsim.harvester import PiecewiseLinearEfficiency
    curves = ex.efficiency_curves([PiecewiseLinearEfficiency()], [1e-7, 1e-4])
    assert curves["piecewise"] == [0.0, pytest.approx(6e-5)]
    ttr = ex.recharge_time_curve(StorageCircuit(), [1e-3])
    assert ttr["t_tr_s"][0] == pytest.approx(3.44, rel=2e-3)
    ex.write_columns_csv(ttr, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "p_h_w,t_tr_s"


def test_cordic_error_report():
    atan_err, sc_err = ex.cordic_error(2000, seed=3)
    assert 0 < atan_err <= 2.0 ** -11
    assert 0 < sc_err <= 2.0 ** -11
