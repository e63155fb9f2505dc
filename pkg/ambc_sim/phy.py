"""Reader observations of the averaged received power.

The Reader averages |z_q(n)|^2 over N ambient symbols per Tag symbol period.
Three fidelities generate that average: ``symbol-level`` draws every ambient
symbol and noise sample, ``chi-square`` draws the exact scaled chi-square law
of the average in O(1), and ``gaussian`` uses its large-N normal limit.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Union

import numpy as np

from ambc_sim.codec import CodeBlock
from ambc_sim.model import (
    ChannelRealization,
    Estimate,
    SystemParams,
    Z95,
    complex_normal,
)

_EPSILON_CHUNK = 200_000


class Fidelity(str, Enum):
    """How the averaged Reader power is generated."""

    SYMBOL_LEVEL = "symbol-level"
    CHI_SQUARE = "chi-square"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class ReaderObservation:
    """Averaged powers for one block.

    Attributes:
        ybar: (Q, J) averaged powers
        fidelity: Fidelity that generated ``ybar``
        c_used: (Q,) bias used by the receiver (true or estimated)
        c_true: (Q,) true bias P_s |h_sr|^2 + sigma2
        n_avg: Averaging length N behind every entry of ``ybar``
    """

    ybar: np.ndarray
    fidelity: Fidelity
    c_used: np.ndarray
    c_true: np.ndarray
    n_avg: int

    def with_bias(self, c_used: np.ndarray) -> "ReaderObservation":
        """Copy of this observation with a different receiver-side bias."""
        return replace(self, c_used=np.asarray(c_used, dtype=float))


@dataclass(frozen=True)
class NormalizedObservation:
    """Linearized and normalized observation y = sqrt(N) (ybar - c) / c, shape (Q, J)."""

    y: np.ndarray

    @property
    def Q(self) -> int:
        return self.y.shape[0]

    @property
    def periods(self) -> int:
        return self.y.shape[1]


def _as_matrix(params: SystemParams, X: Union[CodeBlock, np.ndarray]) -> np.ndarray:
    x = X.X if isinstance(X, CodeBlock) else np.asarray(X, dtype=float)
    if x.ndim != 2 or x.shape[0] != params.M:
        raise ValueError(f"transmit block must have {params.M} rows, got shape {x.shape}")
    if np.any(np.abs(x) > 1.0):
        raise ValueError("Tag symbols must satisfy |x_m| <= 1 (passive reflection)")
    return x


def backscatter_gain(params: SystemParams, ch: ChannelRealization, x: np.ndarray) -> np.ndarray:
    """h_tr G x_j for every antenna and period, shape (Q, J)."""
    g = params.alpha * params.A_TR * ch.h_st
    return ch.h_tr @ (g[:, None] * x)


def mean_power(params: SystemParams, ch: ChannelRealization, X: Union[CodeBlock, np.ndarray]) -> np.ndarray:
    """Expected averaged power mu_{q,j} = P_s |h_sr + h_tr G x_j|^2 + sigma2."""
    x = _as_matrix(params, X)
    coef = ch.h_sr[:, None] + backscatter_gain(params, ch, x)
    return params.P_s * np.abs(coef) ** 2 + params.sigma2


def true_bias(params: SystemParams, ch: ChannelRealization) -> np.ndarray:
    """Information-free bias c_q = P_s |h_sr_q|^2 + sigma2."""
    return params.P_s * np.abs(ch.h_sr) ** 2 + params.sigma2


def observe_block(
    params: SystemParams,
    ch: ChannelRealization,
    X: Union[CodeBlock, np.ndarray],
    fidelity: Union[Fidelity, str],
    stream: np.random.Generator,
) -> ReaderObservation:
    """Generate the Reader's averaged powers for one transmitted block.

    Args:
        params: Scenario parameters
        ch: Channel realization, constant over the block
        X: (M, J) block or CodeBlock; zero columns are silent periods
        fidelity: Observation fidelity
        stream: Random generator

    Returns:
        ReaderObservation with ``c_used`` set to the true bias

    Raises:
        ValueError: If a symbol magnitude exceeds 1 or the block shape is wrong
    """
    fidelity = Fidelity(fidelity)
    x = _as_matrix(params, X)
    n = params.N
    q_count, periods = params.Q, x.shape[1]

    if fidelity is Fidelity.SYMBOL_LEVEL:
        coef = ch.h_sr[:, None] + backscatter_gain(params, ch, x)
        ybar = np.empty((q_count, periods))
        for j in range(periods):
            # one ambient waveform reaches every Reader antenna
            s = complex_normal(stream, n, params.P_s)
            w = complex_normal(stream, (q_count, n), params.sigma2)
            z = coef[:, j, None] * s[None, :] + w
            ybar[:, j] = np.mean(np.abs(z) ** 2, axis=1)
    else:
        mu = mean_power(params, ch, x)
        if fidelity is Fidelity.CHI_SQUARE:
            ybar = mu * stream.chisquare(2 * n, size=mu.shape) / (2 * n)
        else:
            ybar = mu * (1.0 + stream.standard_normal(mu.shape) / math.sqrt(n))

    c = true_bias(params, ch)
    return ReaderObservation(ybar=ybar, fidelity=fidelity, c_used=c, c_true=c, n_avg=n)


def estimate_bias(
    params: SystemParams,
    ch: ChannelRealization,
    fidelity: Union[Fidelity, str],
    n_bias: int,
    stream: np.random.Generator,
) -> np.ndarray:
    """Estimate c_q from one silent pilot period averaged over ``n_bias`` symbols."""
    if n_bias < 1:
        raise ValueError(f"pilot length must be at least 1, got {n_bias}")
    pilot = observe_block(params.with_n(n_bias), ch, CodeBlock.silent(params.M), fidelity, stream)
    return pilot.ybar[:, 0].copy()


def linearize_normalize(obs: ReaderObservation) -> NormalizedObservation:
    """Remove the bias and normalize the noise to unit variance.

    Raises:
        ValueError: If any bias entry is not positive
    """
    c = np.asarray(obs.c_used, dtype=float)
    if np.any(c <= 0):
        raise ValueError("bias must be positive on every Reader antenna")
    y = math.sqrt(obs.n_avg) * (obs.ybar - c[:, None]) / c[:, None]
    return NormalizedObservation(y=y)


def linearization_error(params: SystemParams, n_samples: int, stream: np.random.Generator) -> Estimate:
    """Relative size of the quadratic term dropped by the linear signal model.

    epsilon = E[P_s |h_tr G x|^2] / E[|2 P_s Re{h_sr* h_tr G x} + P_s |h_tr G x|^2|]
    with x the all-ones BPSK vector; the estimate is a ratio of means with a
    delta-method 95% half-width.
    """
    if n_samples < 10_000:
        raise ValueError(f"n_samples must be at least 10^4, got {n_samples}")
    scale = params.alpha * params.A_TR * params.symbol_amplitude
    nums = []
    dens = []
    remaining = n_samples
    while remaining > 0:
        size = min(remaining, _EPSILON_CHUNK)
        h_sr = complex_normal(stream, size)
        h_tr = complex_normal(stream, (size, params.M))
        h_st = complex_normal(stream, (size, params.M))
        s = scale * np.sum(h_tr * h_st, axis=1)
        quad = params.P_s * np.abs(s) ** 2
        nums.append(quad)
        dens.append(np.abs(2.0 * params.P_s * np.real(np.conj(h_sr) * s) + quad))
        remaining -= size
    num = np.concatenate(nums)
    den = np.concatenate(dens)
    ratio = float(num.mean() / den.mean())
    resid = num - ratio * den
    ci = Z95 * float(resid.std()) / (math.sqrt(n_samples) * float(den.mean()))
    return Estimate(value=ratio, ci95=ci, samples=n_samples)
