"""Closed-form BER expressions, their channel average, and Friis path loss."""

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.special import erfc

from ambc_sim.model import ChannelRealization, Estimate, SystemParams, Z95, complex_normal

SPEED_OF_LIGHT = 299_792_458.0

# Ambient RF bands commonly used for backscatter and energy harvesting (Hz).
AMBIENT_BANDS: Dict[str, Tuple[float, float]] = {
    "GSM-900": (925e6, 960e6),
    "GSM-1800": (1.805e9, 1.88e9),
    "UMTS-2100": (2.11e9, 2.17e9),
    "WiFi-2.4": (2.4e9, 2.48e9),
}

_THEORY_CHUNK = 100_000


def band_center(name: str) -> float:
    """Centre frequency of a band in :data:`AMBIENT_BANDS`."""
    try:
        low, high = AMBIENT_BANDS[name]
    except KeyError:
        raise ValueError(f"unknown band '{name}'; known bands: {', '.join(AMBIENT_BANDS)}") from None
    return 0.5 * (low + high)


def q_function(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Tail probability of the standard normal, Q(x) = erfc(x / sqrt(2)) / 2."""
    result = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(result) if np.ndim(result) == 0 else result


def _q_argument(params: SystemParams, h_sr: np.ndarray, h_tr: np.ndarray, h_st: np.ndarray) -> np.ndarray:
    """Linear-detector Q argument for channels with arbitrary leading batch axes.

    Shapes: h_sr (..., Q), h_tr (..., Q, M), h_st (..., M).
    """
    gamma_d = params.gamma_d
    prod = np.real(np.conj(h_sr)[..., :, None] * h_tr * h_st[..., None, :])
    terms = (prod / (gamma_d * np.abs(h_sr) ** 2 + 1.0)[..., :, None]) ** 2
    scale = 2.0 * params.alpha * params.A_TR * math.sqrt(params.N) * gamma_d * params.symbol_amplitude
    return scale * np.sqrt(np.sum(terms, axis=(-2, -1)))


def siso_ber(params: SystemParams, ch: ChannelRealization) -> float:
    """Conditional BER of single-antenna BPSK (uses antenna pair (1, 1))."""
    gamma_d = params.gamma_d
    h_sr = ch.h_sr[0]
    ratio = np.real(np.conj(h_sr) * ch.h_tr[0, 0] * ch.h_st[0]) / (gamma_d * abs(h_sr) ** 2 + 1.0)
    scale = 2.0 * params.alpha * params.A_TR * math.sqrt(params.N) * gamma_d * params.symbol_amplitude
    return q_function(scale * abs(ratio))


def conditional_ber(params: SystemParams, ch: ChannelRealization) -> float:
    """BER of the linear OSTBC detector given one channel realization."""
    return q_function(float(_q_argument(params, ch.h_sr, ch.h_tr, ch.h_st)))


def theoretical_ber(params: SystemParams, n_channels: int, stream: np.random.Generator) -> Estimate:
    """Average of :func:`conditional_ber` over independent channel draws.

    Raises:
        ValueError: If fewer than 1000 channels are requested
    """
    if n_channels < 1000:
        raise ValueError(f"n_channels must be at least 1000, got {n_channels}")
    total = 0.0
    total_sq = 0.0
    remaining = n_channels
    while remaining > 0:
        size = min(remaining, _THEORY_CHUNK)
        h_sr = complex_normal(stream, (size, params.Q))
        h_st = complex_normal(stream, (size, params.M))
        h_tr = complex_normal(stream, (size, params.Q, params.M))
        ber = q_function(_q_argument(params, h_sr, h_tr, h_st))
        total += float(np.sum(ber))
        total_sq += float(np.sum(ber ** 2))
        remaining -= size
    mean = total / n_channels
    var = max(total_sq / n_channels - mean ** 2, 0.0)
    return Estimate(value=mean, ci95=Z95 * math.sqrt(var / n_channels), samples=n_channels)


@dataclass(frozen=True)
class PathLossPoint:
    """Free-space path loss at one frequency and distance (loss in dB, negative)."""

    frequency: float
    distance: float
    loss: float


def friis_path_loss(frequency: float, distance: float) -> float:
    """Free-space path gain 20 log10(lambda / (4 pi d)) in dB, isotropic antennas.

    Raises:
        ValueError: If frequency or distance is not positive
    """
    if frequency <= 0 or distance <= 0:
        raise ValueError(f"frequency and distance must be positive, got f={frequency}, d={distance}")
    wavelength = SPEED_OF_LIGHT / frequency
    return 20.0 * math.log10(wavelength / (4.0 * math.pi * distance))


def path_loss_curve(frequency: float, distances: Sequence[float]) -> List[PathLossPoint]:
    return [PathLossPoint(frequency, d, friis_path_loss(frequency, d)) for d in distances]


def delta_gamma_from_path_loss(loss_db: float, alpha_db: float = 1.1) -> float:
    """Relative SNR in dB for a Tag-Reader path loss: 1 / (alpha^2 A_TR^2)."""
    return -loss_db + alpha_db


def delta_gamma_for_distance(frequency: float, distance: float, alpha_db: float = 1.1) -> float:
    """Relative SNR in dB when the Tag sits ``distance`` metres from the Reader."""
    return delta_gamma_from_path_loss(friis_path_loss(frequency, distance), alpha_db)


def fit_ber_slope(snr_db: Sequence[float], ber: Sequence[float]) -> float:
    """Least-squares slope of log10(BER) against SNR in dB (negative for falling curves).

    A diversity order d shows up as a slope of about -d/10.
    """
    x = np.asarray(snr_db, dtype=float)
    y = np.asarray(ber, dtype=float)
    if x.size < 2 or np.any(y <= 0):
        raise ValueError("slope fit needs at least two points with positive BER")
    return float(np.polyfit(x, np.log10(y), 1)[0])
