"""Coherent and differential detectors for the Tag's space-time blocks."""

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np

from ambc_sim.codec import DIFF_ALPHABET, design_tensor, diff_unmap
from ambc_sim.model import ChannelRealization, EffectiveChannel, SystemParams
from ambc_sim.phy import NormalizedObservation, ReaderObservation, true_bias


class NoiseMode(str, Enum):
    """Noise deviation used by the accurate-model ML detector."""

    EXACT = "exact"
    APPROX = "approx"


class SignalModel(str, Enum):
    """Signal term used by the accurate-model ML detector."""

    ACCURATE = "accurate"
    LINEAR = "linear"


@dataclass(frozen=True)
class DecisionMatrix:
    """Lambda with Lambda u = [h x_1, ..., h x_M]^T for the active code."""

    Lambda: np.ndarray


@lru_cache(maxsize=None)
def candidate_symbols(order: int) -> np.ndarray:
    """Every BPSK vector of length ``order``, lexicographically largest first."""
    cands = np.array(list(itertools.product((1, -1), repeat=order)), dtype=np.int64)
    cands.setflags(write=False)
    return cands


@lru_cache(maxsize=None)
def candidate_blocks(order: int) -> np.ndarray:
    """Integer code blocks for :func:`candidate_symbols`, shape (2^M, M, M)."""
    blocks = np.tensordot(candidate_symbols(order), design_tensor(order), axes=1)
    blocks.setflags(write=False)
    return blocks


def build_decision_matrix(h_q: np.ndarray, order: int) -> DecisionMatrix:
    """Decision matrix of one Reader antenna's effective gains.

    Args:
        h_q: (M,) effective gains of the antenna
        order: Code order M

    Raises:
        UnsupportedOrderError: If the order has no real orthogonal design
    """
    tensor = design_tensor(order)
    h = np.asarray(h_q, dtype=float)
    if h.shape != (order,):
        raise ValueError(f"gain vector must have {order} entries, got shape {h.shape}")
    # column k is A_k^T h
    return DecisionMatrix(Lambda=np.einsum("kmj,m->jk", tensor, h))


def _check_dims(y: np.ndarray, H: EffectiveChannel) -> None:
    if y.shape != (H.Q, H.M):
        raise ValueError(
            f"observation shape {y.shape} does not match a {H.Q}x{H.M} channel over {H.M} periods"
        )


def detect_linear(Y: NormalizedObservation, H: EffectiveChannel) -> np.ndarray:
    """Per-symbol sign decisions on sum_q Lambda_q^T y_q (ties decide +1)."""
    y = np.asarray(Y.y, dtype=float)
    _check_dims(y, H)
    lambdas = np.einsum("kmj,qm->qjk", design_tensor(H.M), H.H)
    v = np.einsum("qjk,qj->k", lambdas, y)
    return np.where(v >= 0, 1, -1)


def detect_min_distance(Y: NormalizedObservation, H: EffectiveChannel, amplitude: float = 1.0) -> np.ndarray:
    """Exhaustive argmin over sum_q sum_j |y_qj - h_q x_j|^2.

    Ties go to the lexicographically largest symbol vector.
    """
    y = np.asarray(Y.y, dtype=float)
    _check_dims(y, H)
    predicted = np.einsum("qm,cmj->cqj", H.H, amplitude * candidate_blocks(H.M))
    metric = np.sum((y[None] - predicted) ** 2, axis=(1, 2))
    return candidate_symbols(H.M)[int(np.argmin(metric))].copy()


def ml_log_likelihoods(
    obs: ReaderObservation,
    params: SystemParams,
    ch: ChannelRealization,
    noise_mode: Union[NoiseMode, str] = NoiseMode.EXACT,
    signal_model: Union[SignalModel, str] = SignalModel.ACCURATE,
) -> np.ndarray:
    """Gaussian log-likelihood of every candidate block, in candidate order."""
    noise_mode = NoiseMode(noise_mode)
    signal_model = SignalModel(signal_model)
    if obs.ybar.shape != (params.Q, params.M):
        raise ValueError(f"observation shape {obs.ybar.shape} does not match Q={params.Q}, M={params.M}")

    blocks = params.symbol_amplitude * candidate_blocks(params.M)
    h_g = ch.h_tr * (params.alpha * params.A_TR * ch.h_st)[None, :]
    gain = np.einsum("qm,cmj->cqj", h_g, blocks)
    direct = ch.h_sr[None, :, None]
    mu = params.P_s * np.abs(direct + gain) ** 2 + params.sigma2

    c_model = true_bias(params, ch)[None, :, None]
    if signal_model is SignalModel.ACCURATE:
        f = mu - c_model
    else:
        f = 2.0 * params.P_s * np.real(np.conj(direct) * gain)

    c_used = np.asarray(obs.c_used, dtype=float)[None, :, None]
    root_n = math.sqrt(obs.n_avg)
    if noise_mode is NoiseMode.EXACT:
        sigma = mu / root_n
    else:
        sigma = np.broadcast_to(c_used / root_n, mu.shape)

    resid = obs.ybar[None] - f - c_used
    return -np.sum(np.log(sigma) + 0.5 * (resid / sigma) ** 2, axis=(1, 2))


def detect_ml_accurate(
    obs: ReaderObservation,
    params: SystemParams,
    ch: ChannelRealization,
    noise_mode: Union[NoiseMode, str] = NoiseMode.EXACT,
    signal_model: Union[SignalModel, str] = SignalModel.ACCURATE,
) -> np.ndarray:
    """Maximum-likelihood block decision on the averaged powers.

    Uses genie knowledge of the channel. ``noise_mode='exact'`` lets the
    noise deviation depend on the hypothesis; ``'approx'`` fixes it at c_q/sqrt(N).
    Ties go to the lexicographically largest symbol vector.
    """
    loglik = ml_log_likelihoods(obs, params, ch, noise_mode, signal_model)
    return candidate_symbols(params.M)[int(np.argmax(loglik))].copy()


def differential_statistics(y_window: np.ndarray) -> np.ndarray:
    """Per-antenna [R1, R2] for a (Q, 4) window, shape (Q, 2)."""
    y = np.asarray(y_window, dtype=float)
    y1, y2, y3, y4 = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
    return np.stack([y3 * y1 + y4 * y2, y3 * y2 - y4 * y1], axis=1)


def detect_differential(y_window: Union[NormalizedObservation, np.ndarray]) -> Tuple[int, int]:
    """Non-coherent decision of two bits from four consecutive periods.

    Args:
        y_window: (Q, 4) normalized observations, previous block then current

    Returns:
        The decoded bit pair

    Raises:
        ValueError: If the window does not span four periods
    """
    y = y_window.y if isinstance(y_window, NormalizedObservation) else np.asarray(y_window, dtype=float)
    if y.ndim != 2 or y.shape[1] != 4:
        raise ValueError(f"differential detection needs a (Q, 4) window, got shape {y.shape}")
    stats = differential_statistics(y)
    alphabet = np.array(DIFF_ALPHABET, dtype=float)
    metric = np.sum((alphabet[:, None, :] - stats[None, :, :]) ** 2, axis=(1, 2))
    return diff_unmap(DIFF_ALPHABET[int(np.argmin(metric))])


def detect_differential_frame(Y: NormalizedObservation) -> List[int]:
    """Decode every data block of a differential frame (reference block first)."""
    y = np.asarray(Y.y, dtype=float)
    if y.shape[1] % 2 or y.shape[1] < 4:
        raise ValueError(f"differential frame needs an even number (>= 4) of periods, got {y.shape[1]}")
    bits: List[int] = []
    for start in range(0, y.shape[1] - 2, 2):
        bits.extend(detect_differential(y[:, start:start + 4]))
    return bits
