import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from wpt_beamsim.channel import ChannelParams, alignment, sample_channel
from wpt_beamsim.errors import DegenerateAngleError, ProtocolError
from wpt_beamsim.experiments import compare_fixed_and_float
from wpt_beamsim.fixedpoint import (LSB, FxComplex, FxWord, block1_step, block2_iteration,
                                    circulant_matrix, circulant_seed, cordic_atan2, cordic_sincos,
                                    fx_div, fx_from_real, fx_mul, fx_sqrt, fx_to_real,
                                    nominal_tau_gain, run_oeb, transmit)
from wpt_beamsim.fixedpoint.oeb import AWAIT_TAU, DONE, OebState, normalizing_shift
from wpt_beamsim.harvester import FeedbackConverter
from wpt_beamsim.oracle import ReplayOracle, SimulatedHarvester
from wpt_beamsim.rng import trial_seed

BOUND = 2.0 ** -11
raws = st.integers(-(1 << 15), (1 << 15) - 1)


def word(x):
    return fx_from_real(x)


# -- words -------------------------------------------------------------------------

def test_quantization_examples():
    assert fx_from_real(0.0).raw == 0
    assert fx_from_real(1.0).raw == 8192
    assert fx_from_real(-4.0).raw == -32768
    assert fx_from_real(0.5 * LSB).raw == 0  # tie goes to even
    assert fx_from_real(1.5 * LSB).raw == 2


def test_quantization_error_bound():
    xs = np.linspace(-3.9, 3.9, 100_001)
    err = max(abs(fx_to_real(fx_from_real(float(x))) - x) for x in xs)
    assert err <= 2.0 ** -14


def test_saturation_is_flagged_not_raised():
    big = fx_from_real(5.0)
    assert big.saturated and big.raw == 32767
    assert fx_from_real(-5.0).raw == -32768
    assert (word(3.0) + word(3.0)).saturated
    assert not (word(1.0) + word(1.0)).saturated
    assert (word(2.0) * word(2.5)).saturated
    assert fx_div(word(1.0), word(0.0)).saturated


@given(raws, raws)
def test_multiply_rounds_to_nearest_even(a, b):
    expected = round(Fraction(a * b, 1 << 13))
    got = fx_mul(FxWord(a), FxWord(b))
    assert got.raw == max(-32768, min(32767, expected))


@given(raws, raws.filter(lambda r: r != 0))
def test_divide_rounds_to_nearest_even(a, b):
    expected = round(Fraction(a << 13, b))
    got = fx_div(FxWord(a), FxWord(b))
    assert got.raw == max(-32768, min(32767, expected))
    assert got.saturated == (not -32768 <= expected <= 32767)


@given(st.integers(0, (1 << 15) - 1))
def test_sqrt_rounds_to_nearest(a):
    assert fx_sqrt(FxWord(a)).raw == round(math.sqrt(a << 13))


def test_sqrt_of_negative_flags():
    assert fx_sqrt(word(-0.5)).saturated


# -- CORDIC ------------------------------------------------------------------------

def test_atan2_examples():
    assert float(cordic_atan2(word(0.0), word(1.5))) == pytest.approx(0.0, abs=BOUND)
    assert float(cordic_atan2(word(0.7), word(0.7))) == pytest.approx(math.pi / 4, abs=BOUND)
    with pytest.raises(DegenerateAngleError):
        cordic_atan2(word(0.0), word(0.0))


def test_atan2_random_sweep_against_high_precision():
    rng = np.random.default_rng(99)
    worst = 0.0
    for y, x in rng.uniform(-3.9, 3.9, (10_000, 2)):
        fy, fx = word(y), word(x)
        ref = float(mpmath.atan2(mpmath.mpf(fy.raw), mpmath.mpf(fx.raw)))
        worst = max(worst, abs(math.remainder(float(cordic_atan2(fy, fx)) - ref, 2 * math.pi)))
    assert worst <= BOUND


@pytest.mark.parametrize("raw_y,raw_x", [
    (0, 1), (0, -1), (1, 0), (-1, 0), (1, -8192), (-1, -8192), (0, -8192), (8192, 1), (8192, -1),
    (-8192, 1), (-8192, -1), (32767, -32768), (-32768, -32768), (1, 32767),
])
def test_atan2_quadrant_boundaries(raw_y, raw_x):
    got = float(cordic_atan2(FxWord(raw_y), FxWord(raw_x)))
    ref = math.atan2(raw_y, raw_x)
    assert abs(math.remainder(got - ref, 2 * math.pi)) <= BOUND


def test_sincos_examples():
    s, c = cordic_sincos(word(0.0))
    assert (float(s), float(c)) == pytest.approx((0.0, 1.0), abs=2.0 ** -12)
    s, c = cordic_sincos(word(math.pi / 2))
    assert (float(s), float(c)) == pytest.approx((1.0, 0.0), abs=BOUND)


def test_sincos_sweep():
    worst_err, worst_norm = 0.0, 0.0
    for theta in np.linspace(-math.pi, math.pi, 10_000):
        ft = word(theta)
        s, c = cordic_sincos(ft)
        worst_err = max(worst_err, abs(float(s) - math.sin(float(ft))), abs(float(c) - math.cos(float(ft))))
        worst_norm = max(worst_norm, abs(float(s) ** 2 + float(c) ** 2 - 1))
    assert worst_err <= BOUND
    assert worst_norm <= 2.0 ** -9


@pytest.mark.parametrize("raw", [0, 1, -1, 12868, 12867, 12869, -12868, 25736, 25735, -25736, -25735])
def test_sincos_boundaries(raw):
    # 12868 and 25736 are the nearest words to pi/2 and pi
    s, c = cordic_sincos(FxWord(raw))
    t = raw * LSB
    assert abs(float(s) - math.sin(t)) <= BOUND and abs(float(c) - math.cos(t)) <= BOUND


# -- circulant basis --------------------------------------------------------------------

def test_circulant_seed_gives_unitary_matrix():
    q = np.array(circulant_matrix(list(circulant_seed())))
    np.testing.assert_allclose(q.conj().T @ q, np.eye(5), atol=1e-10)
    np.testing.assert_allclose(np.abs(q), 1 / math.sqrt(5), atol=1e-15)


def test_quantized_circulant_is_nearly_orthonormal():
    seeds = [FxComplex.from_complex(z) for z in circulant_seed()]
    q = np.array([[complex(c) for c in row] for row in circulant_matrix(seeds)])
    assert np.max(np.abs(q.conj().T @ q - np.eye(5))) <= 2.0 ** -10


def test_block1_registers():
    seeds = circulant_seed()
    state = block1_step(OebState(), seeds)
    col0 = [complex(c) for c in state.rb2[0]]
    np.testing.assert_allclose(col0, seeds, atol=LSB)
    for j in range(4):
        assert state.rb2[j + 1] == state.rb2[j][1:] + state.rb2[j][:1]
    taus = [word(v) for v in (0.5, 0.25, 0.125, 0.375, 0.0625)]
    for tau in taus:
        state = block1_step(transmit(state), tau)
    shift = state.scale_shift
    assert [t.raw for t in state.rb3] == [t.raw << shift for t in taus]


def test_normalizing_shift():
    assert normalizing_shift([word(0.5)] * 5) == 0  # energy 1.25
    assert normalizing_shift([word(0.1)] * 5) == 2  # 0.05 * 16 = 0.8
    assert normalizing_shift([word(1.0), word(1.0)]) == -1  # energy exactly 2
    assert normalizing_shift([FxWord(0)] * 5) == 0


# -- controller --------------------------------------------------------------------------

def test_protocol_violations_are_rejected():
    with pytest.raises(ProtocolError, match="LoadSeed"):
        block1_step(OebState(), word(0.5))
    with pytest.raises(ProtocolError, match="expects 5"):
        block1_step(OebState(), circulant_seed()[:4])
    state = block1_step(OebState(), circulant_seed())
    with pytest.raises(ProtocolError, match="ProbeColumn"):
        block1_step(state, word(0.5))  # magnitude before the column was sent
    with pytest.raises(ProtocolError, match="Block-2"):
        block2_iteration(state, word(0.5))
    state = transmit(state)
    assert state.phase.kind == AWAIT_TAU
    with pytest.raises(ProtocolError):
        transmit(state)
    with pytest.raises(ProtocolError, match="FxWord"):
        block1_step(state, 0.5)
    with pytest.raises(ProtocolError, match="exactly 5"):
        run_oeb(ReplayOracle([1.0]), float, seeds=[1, 0, 0])


def feed_basis(taus):
    state = block1_step(OebState(), circulant_seed())
    for tau in taus:
        state = block1_step(transmit(state), word(tau))
    return state


def test_zero_magnitude_column_leaves_beam_unchanged():
    state = feed_basis([0.5, 0.0, 0.0, 0.0, 0.0])
    assert state.phase.kind == DONE
    assert state.skipped == (1, 2, 3, 4)
    assert state.w_opt == state.rb2[0]


def test_single_iteration_recovers_quarter_turn():
    # unit coefficients with relative phase j on the first two columns
    state = feed_basis([1.0, 1.0, 0.0, 0.0, 0.0])
    state = block2_iteration(state, word(math.sqrt(1 + math.sqrt(2) / 2)))
    state = block2_iteration(state, word(math.sqrt(1 - math.sqrt(2) / 2)))
    assert float(state.theta) == pytest.approx(math.pi / 2, abs=2.0 ** -10)


def oeb_setup(seed):
    params = ChannelParams(n_antennas=5, rician_factor=2.0)
    h = sample_channel(params, seed)
    conv = FeedbackConverter(params=params)
    return h, params, conv, nominal_tau_gain(math.sqrt(5 * params.pathloss))


def test_nominal_gain_is_power_of_two():
    assert nominal_tau_gain(0.2) == 4.0  # 0.2 * 4 = 0.8
    assert nominal_tau_gain(1.0) == 0.5
    with pytest.raises(ValueError):
        nominal_tau_gain(0.0)


def test_oeb_run_shape_and_determinism():
    h, params, conv, gain = oeb_setup(trial_seed(1, 0))
    run_a = run_oeb(SimulatedHarvester(h, params), conv, tau_gain=gain)
    run_b = run_oeb(SimulatedHarvester(h, params), conv, tau_gain=gain)
    assert run_a.probe_count == 13
    assert run_a.state.phase.kind == DONE
    assert run_a.rows() == run_b.rows()
    assert not run_a.saturated


def test_oeb_trace_csv(tmp_path):
    h, params, conv, gain = oeb_setup(trial_seed(1, 1))
    run = run_oeb(SimulatedHarvester(h, params), conv, tau_gain=gain)
    run.write_csv(tmp_path / "a.csv")
    run_oeb(SimulatedHarvester(h, params), conv, tau_gain=gain).write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0].startswith("step,phase_in,event")
    assert len(lines) == 1 + len(run.records)


def test_fixed_dot_product_tracks_floating_point():
    for k in range(40):
        h, params, conv, gain = oeb_setup(trial_seed(2, k))
        run = run_oeb(SimulatedHarvester(h, params), conv, tau_gain=gain)
        scale = gain * 2.0 ** run.state.scale_shift
        assert abs(float(run.state.dot_prod) - np.linalg.norm(h) * scale) <= 2.0 ** -8


def test_fixed_alignment_over_many_channels():
    rows = compare_fixed_and_float(ChannelParams(n_antennas=5, rician_factor=2.0), 150, base_seed=5)
    assert min(r["fixed_alignment"] for r in rows) >= 0.999
    assert all(r["fixed_probes"] == 13 and r["fixed_saturated"] == 0 for r in rows)
    assert min(r["float_alignment"] for r in rows) >= 1 - 1e-7


def test_fixed_alignment_for_line_of_sight_channel():
    params = ChannelParams(n_antennas=5, rician_factor=math.inf)
    h = sample_channel(params, 0)
    conv = FeedbackConverter(params=params)
    run = run_oeb(SimulatedHarvester(h, params), conv, tau_gain=nominal_tau_gain(math.sqrt(5 * params.pathloss)))
    assert alignment(h, run.w_opt) >= 0.999
