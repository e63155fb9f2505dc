"""Unit tests for scenario parameters, channels and the receive SNR."""

import logging
import math

import numpy as np
import pytest

from ambc_sim.model import (
    ChannelRealization,
    SystemParams,
    complex_normal,
    compute_kappa,
    effective_channel,
    kappa_curve,
    n_for_target_gamma_r,
    receive_snr,
    sample_channel,
)
from ambc_sim.streams import Purpose, substream


def unit_params(**overrides):
    values = dict(M=1, Q=1, N=1, P_s=1.0, sigma2=1.0, alpha=1.0, A_TR=1.0)
    values.update(overrides)
    return SystemParams(**values)


def test_substream_is_reproducible():
    """Test that one key always yields the same draws."""
    a = substream(7, 3, 11, Purpose.CHANNEL).standard_normal(5)
    b = substream(7, 3, 11, Purpose.CHANNEL).standard_normal(5)

    assert np.array_equal(a, b)


def test_substream_keys_are_independent():
    """Test that neighbouring keys give uncorrelated streams."""
    a = substream(7, 0).standard_normal(100_000)
    b = substream(7, 1).standard_normal(100_000)

    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02


def test_substream_rejects_negative_seed():
    """Test that a negative master seed is refused."""
    with pytest.raises(ValueError) as exc_info:
        substream(-1, 0)
    assert "non-negative" in str(exc_info.value)


def test_from_db_sets_relative_snr():
    """Test that alpha * A_TR reproduces the requested relative SNR."""
    params = SystemParams.from_db(M=2, Q=1, N=100, gamma_d_db=15, delta_gamma_db=40)

    assert params.alpha * params.A_TR == pytest.approx(1e-2)
    assert params.gamma_d == pytest.approx(10 ** 1.5)
    assert params.delta_gamma_db == pytest.approx(40.0)
    assert params.alpha == pytest.approx(10 ** (-1.1 / 20))


def test_from_db_rejects_relative_snr_below_hardware_loss():
    """Test that A_TR > 1 is refused."""
    with pytest.raises(ValueError) as exc_info:
        SystemParams.from_db(M=2, Q=1, N=100, gamma_d_db=15, delta_gamma_db=0.5)
    assert "hardware loss" in str(exc_info.value)


def test_params_reject_unsupported_tag_antennas():
    """Test that M = 3 is refused with the existence condition."""
    with pytest.raises(ValueError) as exc_info:
        unit_params(M=3)
    assert "M = 2, 4, 8" in str(exc_info.value)


def test_params_reject_zero_averaging_length():
    """Test that N < 1 is refused."""
    with pytest.raises(ValueError):
        unit_params(N=0)


def test_power_normalized_amplitude():
    """Test the symbol magnitude with and without power normalization."""
    assert unit_params(M=4).symbol_amplitude == 1.0
    assert unit_params(M=4, power_normalized=True).symbol_amplitude == pytest.approx(0.5)


def test_sample_channel_same_key_identical():
    """Test that the same substream yields the same realization."""
    params = unit_params(M=2, Q=2)
    a = sample_channel(params, substream(5, 0, 0, Purpose.CHANNEL))
    b = sample_channel(params, substream(5, 0, 0, Purpose.CHANNEL))

    assert np.array_equal(a.h_sr, b.h_sr)
    assert np.array_equal(a.h_st, b.h_st)
    assert np.array_equal(a.h_tr, b.h_tr)


def test_sample_channel_shapes_and_immutability():
    """Test realization shapes and that the arrays are read-only."""
    ch = sample_channel(unit_params(M=4, Q=2), substream(1, 0))

    assert ch.h_sr.shape == (2,)
    assert ch.h_st.shape == (4,)
    assert ch.h_tr.shape == (2, 4)
    with pytest.raises(ValueError):
        ch.h_tr[0, 0] = 0


def test_sample_channel_unit_variance():
    """Test that every entry has unit variance over many draws."""
    params = unit_params(M=2, Q=2)
    stream = substream(11, 0)
    draws = [sample_channel(params, stream) for _ in range(20_000)]
    h_tr = np.array([d.h_tr for d in draws])
    h_sr = np.array([d.h_sr for d in draws])

    assert np.all(np.abs(np.mean(np.abs(h_tr) ** 2, axis=0) - 1.0) < 0.05)
    assert np.all(np.abs(np.mean(np.abs(h_sr) ** 2, axis=0) - 1.0) < 0.05)


def test_channel_realization_rejects_inconsistent_shapes():
    """Test the shape check of ChannelRealization."""
    with pytest.raises(ValueError) as exc_info:
        ChannelRealization(h_sr=np.ones(2), h_st=np.ones(2), h_tr=np.ones((1, 2)))
    assert "inconsistent" in str(exc_info.value)


def test_effective_channel_hand_value():
    """Test h_11 = 1 for unit gains, gamma_d = 1, N = 1 and alpha * A_TR = 1."""
    ch = ChannelRealization(h_sr=[1.0], h_st=[1.0], h_tr=[[1.0]])
    H = effective_channel(unit_params(), ch)

    assert H.H[0, 0] == pytest.approx(1.0)


def test_effective_channel_zero_direct_link():
    """Test that h_sr = 0 gives a zero effective channel."""
    ch = ChannelRealization(h_sr=[0.0, 0.0], h_st=[1.0, 1j], h_tr=[[1.0, 2.0], [0.5j, 1.0]])
    H = effective_channel(unit_params(M=2, Q=2), ch)

    assert np.all(H.H == 0)


def test_effective_channel_scales_with_root_n():
    """Test that four times N doubles every entry."""
    ch = sample_channel(unit_params(M=2, Q=2), substream(3, 0))
    base = effective_channel(unit_params(M=2, Q=2, N=100), ch).H
    quad = effective_channel(unit_params(M=2, Q=2, N=400), ch).H

    assert np.allclose(quad, 2.0 * base, rtol=1e-12, atol=0)


def test_effective_channel_sign_symmetry():
    """Test that negating h_st negates H."""
    params = unit_params(M=2, Q=2, N=50)
    ch = sample_channel(params, substream(3, 1))
    flipped = ChannelRealization(h_sr=ch.h_sr, h_st=-ch.h_st, h_tr=ch.h_tr)

    assert np.array_equal(effective_channel(params, flipped).H, -effective_channel(params, ch).H)


def test_compute_kappa_small_gamma_d_constant():
    """Test kappa / gamma_d^2 against a brute-force Re^2 moment at small gamma_d."""
    gamma_d = 1e-3
    params = unit_params(P_s=gamma_d)
    kappa = compute_kappa(params, 1_000_000, substream(1, Purpose.KAPPA))

    rng = substream(2, Purpose.KAPPA)
    product = complex_normal(rng, 1_000_000).conj() * complex_normal(rng, 1_000_000) * complex_normal(rng, 1_000_000)
    brute = float(np.mean(np.real(product) ** 2))

    assert kappa.value / gamma_d ** 2 == pytest.approx(brute, abs=0.015)
    # circular symmetry: E[Re^2 z] = E|z|^2 / 2
    assert kappa.value / gamma_d ** 2 == pytest.approx(0.5, abs=0.015)


def test_compute_kappa_quadratic_regime():
    """Test that kappa / gamma_d^2 is flat between -30 and -20 dB."""
    low = compute_kappa(unit_params(P_s=1e-3), 500_000, substream(4, Purpose.KAPPA))
    high = compute_kappa(unit_params(P_s=1e-2), 500_000, substream(4, Purpose.KAPPA))

    assert low.value / 1e-6 == pytest.approx(high.value / 1e-4, rel=0.03)


def test_compute_kappa_increases_with_gamma_d():
    """Test kappa(10) > kappa(1) with the same seed."""
    k1 = compute_kappa(unit_params(P_s=1.0), 100_000, substream(9, Purpose.KAPPA))
    k10 = compute_kappa(unit_params(P_s=10.0), 100_000, substream(9, Purpose.KAPPA))

    assert k10.value > k1.value


def test_compute_kappa_is_deterministic():
    """Test that the estimate depends only on the seed."""
    a = compute_kappa(unit_params(P_s=5.0), 20_000, substream(9, Purpose.KAPPA))
    b = compute_kappa(unit_params(P_s=5.0), 20_000, substream(9, Purpose.KAPPA))

    assert a == b
    assert a.ci95 > 0


def test_compute_kappa_rejects_few_samples():
    """Test the 10^4 sample minimum."""
    with pytest.raises(ValueError):
        compute_kappa(unit_params(), 9_999, substream(1))


def test_receive_snr_scaling():
    """Test linearity in N, the inverse dependence on delta_gamma and the M-fold MIMO gain."""
    params = SystemParams.from_db(M=2, Q=1, N=1000, gamma_d_db=15, delta_gamma_db=40)
    base = receive_snr(params, 0.8)
    doubled = receive_snr(params.with_n(2000), 0.8)
    weaker = receive_snr(SystemParams.from_db(M=2, Q=1, N=1000, gamma_d_db=15, delta_gamma_db=50), 0.8)

    assert doubled.gamma_r == pytest.approx(2.0 * base.gamma_r)
    assert weaker.gamma_r_db == pytest.approx(base.gamma_r_db - 10.0)
    assert base.mimo == pytest.approx(2.0 * base.gamma_r)
    assert base.mimo_db - base.gamma_r_db == pytest.approx(3.0103, abs=1e-4)


def test_receive_snr_rejects_non_positive_kappa():
    """Test that kappa must be positive."""
    with pytest.raises(ValueError):
        receive_snr(unit_params(), 0.0)


def test_n_for_target_minimum_with_warning(caplog):
    """Test N = 1 and a warning for target = 4 kappa / delta_gamma."""
    params = SystemParams.from_db(M=2, Q=1, N=1, gamma_d_db=15, delta_gamma_db=40)
    kappa = 0.7

    with caplog.at_level(logging.WARNING, logger="ambc_sim.model"):
        resolved = n_for_target_gamma_r(params, kappa, 4.0 * kappa / params.delta_gamma)

    assert resolved.n == 1
    assert resolved.below_gaussian_threshold is True
    assert "below 30" in caplog.text


def test_n_for_target_doubles_and_round_trips():
    """Test that doubling the target doubles N and that N realizes the target."""
    params = SystemParams.from_db(M=2, Q=1, N=1, gamma_d_db=15, delta_gamma_db=40)
    kappa = 0.9
    target = 10.0

    first = n_for_target_gamma_r(params, kappa, target)
    second = n_for_target_gamma_r(params, kappa, 2 * target)
    realized = receive_snr(params.with_n(first.n), kappa).gamma_r
    step = 4.0 * kappa / params.delta_gamma

    assert abs(second.n - 2 * first.n) <= 1
    assert abs(realized - target) <= step
    assert first.below_gaussian_threshold is False


def test_kappa_curve_flattens():
    """Test that kappa grows with gamma_d and grows less per dB at high gamma_d."""
    params = SystemParams.from_db(M=1, Q=1, N=100, gamma_d_db=0, delta_gamma_db=40)
    curve = kappa_curve(params, [-20, -10, 20, 40], 200_000, substream(6, Purpose.KAPPA))
    kappas = [estimate.value for _, estimate, _ in curve]

    assert kappas == sorted(kappas)
    assert math.log10(kappas[1] / kappas[0]) > math.log10(kappas[3] / kappas[2])
    assert curve[0][2].gamma_r < curve[-1][2].gamma_r
