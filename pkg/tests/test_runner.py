"""Unit tests for the Monte Carlo BER runner."""

import logging
from dataclasses import replace

import pytest

from ambc_sim.analysis import fit_ber_slope
from ambc_sim.config import ConfigError, ExperimentConfig
from ambc_sim.runner import (
    BerPoint,
    BerRunner,
    check_config,
    resolve_points,
    run_ber_point,
    run_epsilon,
    run_sweep,
    run_theory,
    simulate_frame,
)

SMALL = ExperimentConfig(
    M=2,
    Q=1,
    grid=(0.0, 10.0),
    master_seed=7,
    max_trials=400,
    target_bit_errors=10**6,
    batch_trials=50,
    kappa_samples=20_000,
    theory_channels=1_000,
)


def within_cis(a, b):
    return abs(a.ber - b.ber) <= a.ci95 + b.ci95


def test_check_config_rejects_unsupported_tag_antennas():
    """Test that M = 3 stops before any simulation."""
    with pytest.raises(ConfigError) as exc_info:
        check_config(replace(SMALL, M=3))
    assert "M = 2, 4, 8" in str(exc_info.value)


def test_resolve_points_receive_snr_sweep():
    """Test that N grows tenfold per 10 dB of receive SNR."""
    points = resolve_points(replace(SMALL, grid=(10.0, 20.0)))

    assert [p.index for p in points] == [0, 1]
    assert points[1].params.N == pytest.approx(10 * points[0].params.N, rel=1e-3)
    assert all(p.gamma_d_db == 15.0 and p.delta_gamma_db == 40.0 for p in points)


def test_resolve_points_direct_snr_sweep_keeps_n():
    """Test that a gamma_d sweep keeps the configured N."""
    points = resolve_points(replace(SMALL, sweep="gamma_d_db", grid=(0.0, 20.0), N=1234))

    assert [p.params.N for p in points] == [1234, 1234]
    assert [p.gamma_d_db for p in points] == [0.0, 20.0]


def test_resolve_points_relative_snr_sweep_at_fixed_receive_snr():
    """Test that N scales with delta_gamma when gamma_r_db is fixed."""
    config = replace(SMALL, sweep="delta_gamma_db", grid=(40.0, 50.0), gamma_r_db=10.0)
    points = resolve_points(config)

    assert [p.delta_gamma_db for p in points] == [40.0, 50.0]
    assert points[1].params.N == pytest.approx(10 * points[0].params.N, rel=1e-3)


def test_resolve_points_flags_short_averaging():
    """Test the low_n flag for a receive SNR that needs N < 30."""
    low, high = resolve_points(replace(SMALL, grid=(-30.0, 10.0)))

    assert low.low_n is True
    assert high.low_n is False


def test_simulate_frame_is_deterministic():
    """Test that a trial depends only on (seed, point, trial)."""
    point = resolve_points(SMALL)[0]

    assert simulate_frame(SMALL, point, 3) == simulate_frame(SMALL, point, 3)
    assert simulate_frame(SMALL, point, 3)[0] == 2


def test_differential_frame_bit_count():
    """Test that a 16-block differential frame carries 30 data bits."""
    config = replace(SMALL, detector="differential", max_trials=5)
    result = run_ber_point(config, value=10.0)

    assert result.trials == 5
    assert result.bits == 5 * 30


def test_noise_suppressed_regime_is_error_free():
    """Test zero errors over 10^4 frames at gamma_r = 40 dB with M = Q = 2."""
    config = replace(SMALL, Q=2, max_trials=10_000, batch_trials=2_000)
    result = run_ber_point(config, value=40.0)

    assert result.trials == 10_000
    assert result.errors == 0
    assert result.capped is True


def test_min_distance_matches_linear_counts():
    """Test identical error counts for minimum-distance and linear detection."""
    linear = run_sweep(replace(SMALL, M=4, Q=2))
    min_distance = run_sweep(replace(SMALL, M=4, Q=2, detector="min_distance"))

    assert [p.errors for p in linear.points] == [p.errors for p in min_distance.points]
    assert [p.bits for p in linear.points] == [p.bits for p in min_distance.points]


def test_worker_count_does_not_change_results():
    """Test that one and two workers produce the same curve."""
    config = replace(SMALL, target_bit_errors=40, batch_trials=20)
    serial = BerRunner(config, workers=1).run_sweep(label="serial")
    parallel = BerRunner(config, workers=2).run_sweep(label="serial")

    assert serial == parallel


def test_single_point_grid_matches_run_ber_point():
    """Test that a one-point sweep reproduces run_ber_point."""
    config = replace(SMALL, grid=(5.0,))

    assert run_sweep(config).points[0] == run_ber_point(SMALL, value=5.0)


def test_stop_rule_prefix():
    """Test stopping at the first chunk whose cumulative errors reach the target."""
    config = replace(SMALL, target_bit_errors=50, batch_trials=10, max_trials=10_000)
    result = run_ber_point(config, value=0.0)

    assert result.errors >= 50
    assert result.capped is False
    assert result.trials % 10 == 0

    shorter = run_ber_point(replace(config, max_trials=result.trials - 10), value=0.0)
    assert shorter.errors < 50
    assert shorter.capped is True


def test_capped_point_logs_warning(caplog):
    """Test the low-confidence warning when max_trials runs out."""
    config = replace(SMALL, max_trials=20, batch_trials=20, target_bit_errors=10_000)

    with caplog.at_level(logging.WARNING, logger="ambc_sim.runner"):
        result = run_ber_point(config, value=10.0)

    assert result.trials == 20
    assert result.flagged is True
    assert "low-confidence" in caplog.text


def test_ber_point_statistics():
    """Test BER and its normal-approximation half-width."""
    point = BerPoint(
        sweep_var="gamma_r_db", value=10.0, detector="linear", M=2, Q=1, N=100,
        gamma_d_db=15.0, delta_gamma_db=40.0, fidelity="chi-square", bias_mode="perfect",
        trials=50, bits=100, errors=25,
    )

    assert point.ber == 0.25
    assert point.ci95 == pytest.approx(1.959964 * (0.25 * 0.75 / 100) ** 0.5, rel=1e-6)
    assert point.flagged is False


def test_runner_rejects_zero_workers():
    """Test that at least one worker is required."""
    with pytest.raises(ValueError):
        BerRunner(SMALL, workers=0)


@pytest.mark.parametrize("detector", ["ml_exact", "ml_approx"])
def test_ml_detectors_run(detector):
    """Test that both ML variants produce counts for every point."""
    curve = run_sweep(replace(SMALL, detector=detector, max_trials=100), label=detector)

    assert curve.label == detector
    assert len(curve) == 2
    assert all(p.bits == 200 for p in curve.points)


def test_estimated_bias_runs():
    """Test a sweep with the bias estimated from a silent pilot."""
    curve = run_sweep(replace(SMALL, bias_mode="estimated", n_bias=500, max_trials=100))

    assert all(p.bias_mode == "estimated" and p.bits == 200 for p in curve.points)


def test_progress_callback():
    """Test that the callback sees every finished point in order."""
    seen = []
    run_sweep(replace(SMALL, max_trials=50), progress=seen.append)

    assert [p.value for p in seen] == [0.0, 10.0]


def test_run_theory_decreases():
    """Test that the closed-form BER falls along the receive-SNR grid."""
    points = run_theory(replace(SMALL, grid=(0.0, 10.0, 20.0)))

    assert len(points) == 3
    assert points[0].ber > points[1].ber > points[2].ber
    assert all(p.channels == 1_000 for p in points)


def test_run_epsilon_grid():
    """Test one epsilon point per (M, delta_gamma) pair, falling with delta_gamma."""
    points = run_epsilon(SMALL, [30.0, 50.0], antennas=[2, 4], samples=20_000)

    assert [(p.M, p.delta_gamma_db) for p in points] == [(2, 30.0), (2, 50.0), (4, 30.0), (4, 50.0)]
    assert points[0].epsilon > points[1].epsilon
    assert points[2].epsilon > points[3].epsilon


@pytest.mark.slow
def test_theory_matches_simulation():
    """Test simulated and closed-form linear BER at gamma_r = 10 dB within 3 combined widths."""
    config = replace(SMALL, grid=(10.0,), max_trials=200_000, target_bit_errors=200,
                     batch_trials=2_000, theory_channels=100_000)
    simulated = run_ber_point(config)
    theory = run_theory(config)[0]

    assert abs(simulated.ber - theory.ber) < 3 * (simulated.ci95 + theory.ci95)


@pytest.mark.slow
def test_antenna_diversity_ordering():
    """Test BER(2,2) < BER(2,1) < BER(1,1) at 15 dB and slopes steepening 1.7x per doubling of M*Q."""
    base = replace(SMALL, grid=(10.0, 15.0, 20.0), max_trials=5_000_000, target_bit_errors=400,
                   batch_trials=10_000)
    pairs = [(1, 1), (2, 1), (2, 2)]
    curves = {mq: run_sweep(replace(base, M=mq[0], Q=mq[1]), workers=4) for mq in pairs}
    at15 = {mq: curve.points[1] for mq, curve in curves.items()}

    assert at15[(2, 2)].ber + at15[(2, 2)].ci95 < at15[(2, 1)].ber - at15[(2, 1)].ci95
    assert at15[(2, 1)].ber + at15[(2, 1)].ci95 < at15[(1, 1)].ber - at15[(1, 1)].ci95

    slopes = {mq: fit_ber_slope(base.grid, [p.ber for p in curves[mq].points]) for mq in pairs}
    assert slopes[(2, 1)] <= 1.7 * slopes[(1, 1)]
    assert slopes[(2, 2)] <= 1.7 * slopes[(2, 1)]


@pytest.mark.slow
@pytest.mark.parametrize("mq", [(1, 1), (2, 1)])
def test_ml_and_linear_agree_for_two_tag_antennas(mq):
    """Test that ML and linear BER overlap within their CIs at delta_gamma = 40 dB."""
    base = replace(SMALL, M=mq[0], Q=mq[1], grid=(5.0, 10.0, 15.0), max_trials=2_000_000,
                   target_bit_errors=200, batch_trials=5_000)
    ml = run_sweep(replace(base, detector="ml_exact"), workers=4)
    linear = run_sweep(base, workers=4)

    for a, b in zip(ml.points, linear.points):
        assert within_cis(a, b)


@pytest.mark.slow
def test_linear_error_floor_with_eight_tag_antennas():
    """Test that M = 8 linear BER barely moves from 20 to 25 dB at delta_gamma = 40 dB."""
    config = replace(SMALL, M=8, Q=2, grid=(20.0, 25.0), max_trials=2_000_000,
                     target_bit_errors=100, batch_trials=5_000)
    at20, at25 = run_sweep(config, workers=4).points

    assert at20.errors > 0
    assert at25.ber >= at20.ber / 2


@pytest.mark.slow
def test_ml_and_linear_agree_at_high_relative_snr():
    """Test that the M = 8 ML-linear gap closes at delta_gamma = 50 dB."""
    # both runs are capped, so they see the same frames
    base = replace(SMALL, M=8, Q=2, delta_gamma_db=50.0, grid=(5.0, 10.0), max_trials=20_000,
                   target_bit_errors=10**9, batch_trials=2_000)
    ml = run_sweep(replace(base, detector="ml_exact"), workers=4)
    linear = run_sweep(base, workers=4)

    for a, b in zip(ml.points, linear.points):
        assert a.trials == b.trials == 20_000
        assert within_cis(a, b)


@pytest.mark.slow
def test_exact_and_approximated_ml_noise_agree():
    """Test that dropping the backscatter term from the ML noise barely changes BER."""
    base = replace(SMALL, grid=(5.0, 10.0, 15.0), max_trials=50_000, target_bit_errors=10**9,
                   batch_trials=5_000)
    exact = run_sweep(replace(base, detector="ml_exact"), workers=4)
    approx = run_sweep(replace(base, detector="ml_approx"), workers=4)

    for a, b in zip(exact.points, approx.points):
        assert a.bits == b.bits
        assert within_cis(a, b)


@pytest.mark.slow
def test_direct_snr_saturation():
    """Test equal BER at gamma_d = 40 and 60 dB with N = 40000."""
    config = replace(SMALL, sweep="gamma_d_db", grid=(40.0, 60.0), N=40_000, max_trials=1_000_000,
                     target_bit_errors=200, batch_trials=5_000)
    at40, at60 = run_sweep(config, workers=4).points

    assert at40.N == at60.N == 40_000
    assert within_cis(at40, at60)


@pytest.mark.slow
def test_linear_ber_insensitive_to_relative_snr():
    """Test linear BER at gamma_r = 10 dB across delta_gamma = 35, 40 and 50 dB."""
    config = replace(SMALL, sweep="delta_gamma_db", grid=(35.0, 40.0, 50.0), gamma_r_db=10.0,
                     max_trials=1_000_000, target_bit_errors=200, batch_trials=5_000)
    points = run_sweep(config, workers=4).points

    for i, a in enumerate(points):
        for b in points[i + 1:]:
            assert within_cis(a, b)


@pytest.mark.slow
def test_ml_gain_shrinks_with_relative_snr():
    """Test a larger linear-minus-ML error gap at delta_gamma = 30 dB than at 50 dB."""
    base = replace(SMALL, sweep="delta_gamma_db", grid=(30.0, 50.0), gamma_r_db=10.0,
                   max_trials=50_000, target_bit_errors=10**9, batch_trials=5_000)
    ml = run_sweep(replace(base, detector="ml_exact"), workers=4).points
    linear = run_sweep(base, workers=4).points

    gap30 = linear[0].errors - ml[0].errors
    gap50 = linear[1].errors - ml[1].errors
    assert gap30 > gap50


@pytest.mark.slow
def test_differential_loses_constant_margin():
    """Test differential BER above coherent at 15 dB with slopes equal within 20%."""
    base = replace(SMALL, grid=(10.0, 15.0, 20.0), max_trials=1_000_000, target_bit_errors=200,
                   batch_trials=5_000)
    coherent = run_sweep(base, workers=4).points
    differential = run_sweep(replace(base, detector="differential"), workers=4).points

    assert differential[1].ber - differential[1].ci95 > coherent[1].ber + coherent[1].ci95

    coherent_slope = fit_ber_slope(base.grid, [p.ber for p in coherent])
    differential_slope = fit_ber_slope(base.grid, [p.ber for p in differential])
    assert abs(differential_slope - coherent_slope) <= 0.2 * abs(coherent_slope)
