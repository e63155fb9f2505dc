"""Scenario parameters, random channels and the linearized MIMO channel."""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.stats import norm

logger = logging.getLogger(__name__)

SUPPORTED_TAG_ANTENNAS = (1, 2, 4, 8)

# Two-sided 95% normal quantile used for every confidence half-width.
Z95 = float(norm.ppf(0.975))

# Below this averaging length the Gaussian approximation of the averaged
# power is considered inadequate.
MIN_GAUSSIAN_N = 30

_KAPPA_CHUNK = 1_000_000


def db_to_linear(value_db: float) -> float:
    """Convert a power ratio from dB to linear scale."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a linear power ratio to dB (``-inf`` for zero)."""
    if value == 0:
        return -math.inf
    return 10.0 * math.log10(value)


def alpha_from_db(loss_db: float) -> float:
    """Amplitude factor for a Tag hardware loss given in power dB."""
    return 10.0 ** (-loss_db / 20.0)


class Estimate(NamedTuple):
    """Monte Carlo estimate with a 95% confidence half-width."""

    value: float
    ci95: float
    samples: int


class SnrReport(NamedTuple):
    """Receive SNR of the single-antenna reference and of the M-antenna Tag."""

    gamma_r: float
    gamma_r_db: float
    mimo: float
    mimo_db: float


class AveragingLength(NamedTuple):
    """Averaging length resolved for a target receive SNR."""

    n: int
    below_gaussian_threshold: bool


@dataclass(frozen=True)
class SystemParams:
    """All constants of one simulated scenario.

    Attributes:
        M: Tag antenna count (1, 2, 4 or 8)
        Q: Reader antenna count
        N: Ambient symbols averaged per Tag symbol
        P_s: Ambient signal power (linear)
        sigma2: Normalized noise power (linear)
        alpha: Tag hardware loss as an amplitude factor in (0, 1]
        A_TR: Tag-to-Reader large-scale amplitude fading in (0, 1]
        power_normalized: Scale Tag symbols to +-1/sqrt(M)
    """

    M: int
    Q: int
    N: int
    P_s: float
    sigma2: float = 1.0
    alpha: float = field(default_factory=lambda: alpha_from_db(1.1))
    A_TR: float = 1e-2
    power_normalized: bool = False

    def __post_init__(self) -> None:
        if self.M not in SUPPORTED_TAG_ANTENNAS:
            raise ValueError(
                f"M={self.M} is not supported: a real orthogonal design exists only "
                "for M = 2, 4, 8 (M = 1 is the single-antenna case)"
            )
        if self.Q < 1:
            raise ValueError(f"Q must be at least 1, got {self.Q}")
        if self.N < 1:
            raise ValueError(f"N must be at least 1, got {self.N}")
        if self.P_s < 0:
            raise ValueError(f"P_s must be non-negative, got {self.P_s}")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 < self.A_TR <= 1:
            raise ValueError(f"A_TR must lie in (0, 1], got {self.A_TR}")

    @classmethod
    def from_db(
        cls,
        M: int,
        Q: int,
        N: int,
        gamma_d_db: float,
        delta_gamma_db: float,
        alpha_db: float = 1.1,
        sigma2: float = 1.0,
        power_normalized: bool = False,
    ) -> "SystemParams":
        """Build parameters from the dB quantities used by the experiments.

        Args:
            M: Tag antenna count
            Q: Reader antenna count
            N: Averaging length
            gamma_d_db: Direct link SNR in dB
            delta_gamma_db: Relative SNR in dB
            alpha_db: Tag hardware loss in power dB
            sigma2: Normalized noise power

        Returns:
            SystemParams with ``P_s = gamma_d * sigma2`` and
            ``A_TR = 1 / (alpha * sqrt(delta_gamma))``
        """
        alpha = alpha_from_db(alpha_db)
        a_tr = 1.0 / (alpha * math.sqrt(db_to_linear(delta_gamma_db)))
        if a_tr > 1:
            raise ValueError(
                f"delta_gamma_db={delta_gamma_db} is below the hardware loss "
                f"({alpha_db} dB): the Tag-Reader amplitude would exceed 1"
            )
        return cls(
            M=M,
            Q=Q,
            N=N,
            P_s=db_to_linear(gamma_d_db) * sigma2,
            sigma2=sigma2,
            alpha=alpha,
            A_TR=a_tr,
            power_normalized=power_normalized,
        )

    @property
    def gamma_d(self) -> float:
        return self.P_s / self.sigma2

    @property
    def delta_gamma(self) -> float:
        return 1.0 / (self.alpha ** 2 * self.A_TR ** 2)

    @property
    def gamma_d_db(self) -> float:
        return linear_to_db(self.gamma_d)

    @property
    def delta_gamma_db(self) -> float:
        return linear_to_db(self.delta_gamma)

    @property
    def symbol_amplitude(self) -> float:
        """Magnitude of every Tag symbol (1, or 1/sqrt(M) when power normalized)."""
        return 1.0 / math.sqrt(self.M) if self.power_normalized else 1.0

    def with_n(self, n: int) -> "SystemParams":
        return replace(self, N=n)


@dataclass(frozen=True)
class ChannelRealization:
    """One quasi-static draw of the small-scale fading.

    Attributes:
        h_sr: Source-to-Reader gains, shape (Q,)
        h_st: Source-to-Tag gains, shape (M,)
        h_tr: Tag-to-Reader gains, shape (Q, M)
    """

    h_sr: np.ndarray
    h_st: np.ndarray
    h_tr: np.ndarray

    def __post_init__(self) -> None:
        for name in ("h_sr", "h_st", "h_tr"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        q, m = self.h_tr.shape
        if self.h_sr.shape != (q,) or self.h_st.shape != (m,):
            raise ValueError(
                f"inconsistent channel shapes: h_sr {self.h_sr.shape}, "
                f"h_st {self.h_st.shape}, h_tr {self.h_tr.shape}"
            )

    @property
    def backscatter_product(self) -> np.ndarray:
        """``conj(h_sr[q]) * h_tr[q, m] * h_st[m]`` for every (q, m)."""
        return np.conj(self.h_sr)[:, None] * self.h_tr * self.h_st[None, :]


@dataclass(frozen=True)
class EffectiveChannel:
    """Linearized and normalized Q x M real channel."""

    H: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.H, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "H", arr)

    @property
    def Q(self) -> int:
        return self.H.shape[0]

    @property
    def M(self) -> int:
        return self.H.shape[1]


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with the given variance."""
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channel(params: SystemParams, stream: np.random.Generator) -> ChannelRealization:
    """Draw one i.i.d. CN(0, 1) channel realization.

    Args:
        params: Scenario parameters (only M and Q are used)
        stream: Generator from :func:`ambc_sim.streams.substream`

    Returns:
        ChannelRealization
    """
    h_sr = complex_normal(stream, params.Q)
    h_st = complex_normal(stream, params.M)
    h_tr = complex_normal(stream, (params.Q, params.M))
    return ChannelRealization(h_sr=h_sr, h_st=h_st, h_tr=h_tr)


def effective_channel(params: SystemParams, ch: ChannelRealization) -> EffectiveChannel:
    """Effective gains h_{q,m} of the linearized and normalized MIMO model."""
    gamma_d = params.gamma_d
    scale = 2.0 * params.alpha * params.A_TR * math.sqrt(params.N) * gamma_d
    denom = gamma_d * np.abs(ch.h_sr) ** 2 + 1.0
    return EffectiveChannel(H=scale * np.real(ch.backscatter_product) / denom[:, None])


def compute_kappa(params: SystemParams, n_samples: int, stream: np.random.Generator) -> Estimate:
    """Monte Carlo estimate of the receive-SNR shape factor kappa(gamma_d).

    kappa = E[(gamma_d Re{h_sr* h_tr h_st} / (gamma_d |h_sr|^2 + 1))^2] has no
    closed form; the estimate comes with a 95% half-width.
    """
    if n_samples < 10_000:
        raise ValueError(f"n_samples must be at least 10^4, got {n_samples}")
    gamma_d = params.gamma_d
    total = 0.0
    total_sq = 0.0
    remaining = n_samples
    while remaining > 0:
        size = min(remaining, _KAPPA_CHUNK)
        h_sr = complex_normal(stream, size)
        h_tr = complex_normal(stream, size)
        h_st = complex_normal(stream, size)
        term = (gamma_d * np.real(np.conj(h_sr) * h_tr * h_st) / (gamma_d * np.abs(h_sr) ** 2 + 1.0)) ** 2
        total += float(term.sum())
        total_sq += float(np.square(term).sum())
        remaining -= size
    mean = total / n_samples
    var = max(total_sq / n_samples - mean ** 2, 0.0)
    return Estimate(value=mean, ci95=Z95 * math.sqrt(var / n_samples), samples=n_samples)


def receive_snr(params: SystemParams, kappa: float) -> SnrReport:
    """Receive SNR of the single-antenna reference and the M-antenna Tag."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    gamma_r = 4.0 * params.N * kappa / params.delta_gamma
    mimo = params.M * gamma_r
    return SnrReport(
        gamma_r=gamma_r,
        gamma_r_db=linear_to_db(gamma_r),
        mimo=mimo,
        mimo_db=linear_to_db(mimo),
    )


def n_for_target_gamma_r(params: SystemParams, kappa: float, target_gamma_r: float) -> AveragingLength:
    """Averaging length that realizes a target single-antenna receive SNR.

    Args:
        params: Scenario parameters (N is ignored)
        kappa: Shape factor from :func:`compute_kappa`
        target_gamma_r: Target receive SNR, linear

    Returns:
        AveragingLength with the rounded N (at least 1) and whether it falls
        below the Gaussian-approximation threshold of 30
    """
    if target_gamma_r <= 0:
        raise ValueError(f"target receive SNR must be positive, got {target_gamma_r}")
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    n = max(1, int(round(target_gamma_r * params.delta_gamma / (4.0 * kappa))))
    low = n < MIN_GAUSSIAN_N
    if low:
        logger.warning(
            "N=%d for target receive SNR %.2f dB is below %d; the averaged power is far from Gaussian",
            n, linear_to_db(target_gamma_r), MIN_GAUSSIAN_N,
        )
    return AveragingLength(n=n, below_gaussian_threshold=low)


def kappa_curve(
    params: SystemParams,
    gamma_d_db_grid: Sequence[float],
    n_samples: int,
    stream: np.random.Generator,
) -> List[Tuple[float, Estimate, SnrReport]]:
    """kappa and receive SNR across direct-link SNRs at fixed N and delta_gamma.

    Shows the quadratic growth at small gamma_d and the flattening at large
    gamma_d.
    """
    curve = []
    for gamma_d_db in gamma_d_db_grid:
        point = replace(params, P_s=db_to_linear(gamma_d_db) * params.sigma2)
        kappa = compute_kappa(point, n_samples, stream)
        curve.append((gamma_d_db, kappa, receive_snr(point, kappa.value)))
    return curve
