"""Deterministic, parallel Monte Carlo BER estimation over parameter sweeps."""

import logging
import math
from dataclasses import dataclass, replace
from functools import partial
from multiprocessing import Pool
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ambc_sim.analysis import theoretical_ber
from ambc_sim.codec import DiffState, bpsk_demodulate, bpsk_modulate, encode_coherent_block, encode_diff_stream
from ambc_sim.config import ConfigError, ExperimentConfig
from ambc_sim.detectors import (
    NoiseMode,
    detect_differential_frame,
    detect_linear,
    detect_min_distance,
    detect_ml_accurate,
)
from ambc_sim.model import (
    SystemParams,
    Z95,
    compute_kappa,
    db_to_linear,
    effective_channel,
    n_for_target_gamma_r,
    sample_channel,
)
from ambc_sim.phy import (
    NormalizedObservation,
    ReaderObservation,
    estimate_bias,
    linearization_error,
    linearize_normalize,
    observe_block,
)
from ambc_sim.streams import Purpose, substream
from ambc_sim.validator import ConfigValidator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PointSpec:
    """One grid point resolved to concrete system parameters."""

    index: int
    value: float
    params: SystemParams
    gamma_d_db: float
    delta_gamma_db: float
    low_n: bool = False


@dataclass(frozen=True)
class BerPoint:
    """Error counts of one grid point; BER and its half-width derive from them."""

    sweep_var: str
    value: float
    detector: str
    M: int
    Q: int
    N: int
    gamma_d_db: float
    delta_gamma_db: float
    fidelity: str
    bias_mode: str
    trials: int
    bits: int
    errors: int
    capped: bool = False
    low_n: bool = False

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else 0.0

    @property
    def ci95(self) -> float:
        """Normal-approximation 95% half-width of the BER."""
        if not self.bits:
            return 0.0
        p = self.ber
        return Z95 * math.sqrt(p * (1.0 - p) / self.bits)

    @property
    def flagged(self) -> bool:
        return self.capped or self.low_n


@dataclass(frozen=True)
class BerCurve:
    """Ordered BER points of one sweep."""

    points: Tuple[BerPoint, ...] = ()
    label: str = ""

    def __len__(self) -> int:
        return len(self.points)

    @property
    def flagged(self) -> List[BerPoint]:
        return [p for p in self.points if p.flagged]


@dataclass(frozen=True)
class TheoryPoint:
    """Channel-averaged closed-form BER of the linear detector at one grid point."""

    sweep_var: str
    value: float
    M: int
    Q: int
    N: int
    gamma_d_db: float
    delta_gamma_db: float
    channels: int
    ber: float
    ci95: float


@dataclass(frozen=True)
class EpsilonPoint:
    """Relative size of the dropped quadratic term at one (delta_gamma, M)."""

    delta_gamma_db: float
    M: int
    samples: int
    epsilon: float
    ci95: float


def check_config(config: ExperimentConfig) -> None:
    """Raise ConfigError listing every validation failure."""
    errors = ConfigValidator().validate(config)
    if errors:
        raise ConfigError("; ".join(errors))


def resolve_points(config: ExperimentConfig) -> List[PointSpec]:
    """Turn the sweep grid into concrete parameters.

    A receive-SNR target (the ``gamma_r_db`` sweep, or ``gamma_r_db`` in a
    ``delta_gamma_db`` sweep) sets N from one kappa estimate; kappa depends on
    gamma_d only, so it is shared by every point.
    """
    check_config(config)
    points = []
    kappa = None
    if config.sweep == "gamma_r_db" or (config.sweep == "delta_gamma_db" and config.gamma_r_db is not None):
        estimate = compute_kappa(config.params(), config.kappa_samples, substream(config.master_seed, Purpose.KAPPA))
        kappa = estimate.value
        logger.debug("kappa(gamma_d=%s dB) = %.6g +- %.2g", config.gamma_d_db, kappa, estimate.ci95)

    for index, value in enumerate(config.grid):
        gamma_d_db, delta_gamma_db = config.gamma_d_db, config.delta_gamma_db
        target = None
        if config.sweep == "gamma_r_db":
            target = value
        elif config.sweep == "gamma_d_db":
            gamma_d_db = value
        else:
            delta_gamma_db = value
            target = config.gamma_r_db

        params = config.params(gamma_d_db=gamma_d_db, delta_gamma_db=delta_gamma_db)
        low_n = False
        if target is not None:
            resolved = n_for_target_gamma_r(params, kappa, db_to_linear(target))
            params = params.with_n(resolved.n)
            low_n = resolved.below_gaussian_threshold
        points.append(PointSpec(index, float(value), params, gamma_d_db, delta_gamma_db, low_n))
    return points


def _decide_coherent(
    config: ExperimentConfig, params: SystemParams, ch, obs: ReaderObservation
) -> np.ndarray:
    m = params.M
    blocks = [slice(b * m, (b + 1) * m) for b in range(obs.ybar.shape[1] // m)]
    if config.detector in ("ml_exact", "ml_approx"):
        mode = NoiseMode.EXACT if config.detector == "ml_exact" else NoiseMode.APPROX
        decisions = [detect_ml_accurate(replace(obs, ybar=obs.ybar[:, sl]), params, ch, mode) for sl in blocks]
    else:
        y = linearize_normalize(obs).y
        H = effective_channel(params, ch)
        if config.detector == "linear":
            decisions = [detect_linear(NormalizedObservation(y[:, sl]), H) for sl in blocks]
        else:
            decisions = [
                detect_min_distance(NormalizedObservation(y[:, sl]), H, params.symbol_amplitude) for sl in blocks
            ]
    return bpsk_demodulate(np.concatenate(decisions))


def simulate_frame(config: ExperimentConfig, point: PointSpec, trial: int) -> Tuple[int, int]:
    """Run one frame (one channel realization) and return (data bits, bit errors).

    Every random draw comes from a substream keyed by (point, trial, purpose),
    so the outcome of a trial never depends on which worker runs it.
    """
    params = point.params
    key = (point.index, trial)
    seed = config.master_seed
    ch = sample_channel(params, substream(seed, *key, Purpose.CHANNEL))
    bit_stream = substream(seed, *key, Purpose.BITS)
    amplitude = params.symbol_amplitude
    blocks = config.blocks_per_frame

    if config.is_differential:
        bits = bit_stream.integers(0, 2, size=2 * (blocks - 1))
        coded = encode_diff_stream(bits, DiffState(config.diff_init), amplitude)
    else:
        bits = bit_stream.integers(0, 2, size=blocks * params.M)
        coded = [
            encode_coherent_block(bpsk_modulate(bits[b * params.M:(b + 1) * params.M]), amplitude)
            for b in range(blocks)
        ]

    X = np.hstack([block.X for block in coded])
    obs = observe_block(params, ch, X, config.fidelity, substream(seed, *key, Purpose.OBSERVE))
    if config.bias_mode == "estimated":
        c_hat = estimate_bias(
            params, ch, config.fidelity, config.pilot_length(params.N), substream(seed, *key, Purpose.BIAS)
        )
        obs = obs.with_bias(c_hat)

    if config.is_differential:
        decided = np.asarray(detect_differential_frame(linearize_normalize(obs)), dtype=np.int64)
    else:
        decided = _decide_coherent(config, params, ch, obs)
    return int(bits.size), int(np.count_nonzero(decided != bits))


def _run_chunk(config: ExperimentConfig, point: PointSpec, chunk: Tuple[int, int]) -> Tuple[int, int, int]:
    start, stop = chunk
    bits = errors = 0
    for trial in range(start, stop):
        b, e = simulate_frame(config, point, trial)
        bits += b
        errors += e
    return stop - start, bits, errors


def _chunks(max_trials: int, batch: int) -> List[Tuple[int, int]]:
    return [(start, min(start + batch, max_trials)) for start in range(0, max_trials, batch)]


class BerRunner:
    """Run BER points and sweeps with an optional process pool."""

    def __init__(self, config: ExperimentConfig, workers: int = 1):
        """Initialize the runner.

        Args:
            config: Experiment configuration (validated on use)
            workers: Worker processes; 1 runs inline
        """
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")
        self.config = config
        self.workers = workers

    def run_point(self, point: PointSpec, mapper: Optional[Callable] = None) -> BerPoint:
        """Estimate the BER of one resolved grid point.

        Chunks of ``batch_trials`` frames run in waves of ``workers`` chunks.
        Counts are merged in chunk order and the run stops after the first
        chunk whose cumulative errors reach the target, so the result is the
        same for every worker count.
        """
        config = self.config
        mapper = mapper or map
        work = partial(_run_chunk, config, point)
        chunks = _chunks(config.max_trials, config.batch_trials)

        trials = bits = errors = 0
        done = False
        for wave_start in range(0, len(chunks), self.workers):
            wave = chunks[wave_start:wave_start + self.workers]
            for chunk_trials, chunk_bits, chunk_errors in mapper(work, wave):
                trials += chunk_trials
                bits += chunk_bits
                errors += chunk_errors
                if errors >= config.target_bit_errors:
                    done = True
                    break
            if done:
                break

        capped = errors < config.target_bit_errors
        result = BerPoint(
            sweep_var=config.sweep,
            value=point.value,
            detector=config.detector,
            M=point.params.M,
            Q=point.params.Q,
            N=point.params.N,
            gamma_d_db=point.gamma_d_db,
            delta_gamma_db=point.delta_gamma_db,
            fidelity=config.fidelity,
            bias_mode=config.bias_mode,
            trials=trials,
            bits=bits,
            errors=errors,
            capped=capped,
            low_n=point.low_n,
        )
        if capped:
            logger.warning(
                "%s=%s: only %d bit errors after max_trials=%d; BER is low-confidence",
                config.sweep, point.value, errors, config.max_trials,
            )
        logger.debug("%s=%s N=%d trials=%d BER=%.3e", config.sweep, point.value, point.params.N, trials, result.ber)
        return result

    def run_sweep(self, progress: Optional[Callable[[BerPoint], None]] = None, label: str = "") -> BerCurve:
        """Map :meth:`run_point` over the grid.

        Args:
            progress: Called with every finished point
            label: Name attached to the curve

        Returns:
            BerCurve in grid order

        Raises:
            ConfigError: If the configuration is invalid
        """
        points = resolve_points(self.config)
        results = []
        if self.workers == 1:
            for point in points:
                results.append(self.run_point(point))
                if progress:
                    progress(results[-1])
        else:
            with Pool(processes=self.workers) as pool:
                for point in points:
                    results.append(self.run_point(point, mapper=pool.map))
                    if progress:
                        progress(results[-1])
        return BerCurve(points=tuple(results), label=label)


def run_ber_point(config: ExperimentConfig, value: Optional[float] = None, workers: int = 1) -> BerPoint:
    """BER at one grid point (the first grid value when ``value`` is omitted)."""
    if value is not None:
        config = replace(config, grid=(float(value),))
    point = resolve_points(config)[0]
    return BerRunner(config, workers).run_point(point)


def run_sweep(
    config: ExperimentConfig,
    workers: int = 1,
    progress: Optional[Callable[[BerPoint], None]] = None,
    label: str = "",
) -> BerCurve:
    return BerRunner(config, workers).run_sweep(progress=progress, label=label)


def run_theory(config: ExperimentConfig) -> List[TheoryPoint]:
    """Closed-form linear-detector BER over the same grid as :func:`run_sweep`."""
    results = []
    for point in resolve_points(config):
        estimate = theoretical_ber(
            point.params, config.theory_channels, substream(config.master_seed, point.index, Purpose.THEORY)
        )
        results.append(TheoryPoint(
            sweep_var=config.sweep,
            value=point.value,
            M=point.params.M,
            Q=point.params.Q,
            N=point.params.N,
            gamma_d_db=point.gamma_d_db,
            delta_gamma_db=point.delta_gamma_db,
            channels=estimate.samples,
            ber=estimate.value,
            ci95=estimate.ci95,
        ))
    return results


def run_epsilon(
    config: ExperimentConfig,
    delta_gamma_grid: Sequence[float],
    antennas: Iterable[int],
    samples: int,
) -> List[EpsilonPoint]:
    """Linearization error over a delta-gamma grid for each Tag antenna count."""
    results = []
    for m in antennas:
        for index, delta_gamma_db in enumerate(delta_gamma_grid):
            params = replace(config, M=m).params(delta_gamma_db=delta_gamma_db)
            stream = substream(config.master_seed, m, index, Purpose.EPSILON)
            estimate = linearization_error(params, samples, stream)
            results.append(EpsilonPoint(float(delta_gamma_db), m, estimate.samples, estimate.value, estimate.ci95))
    return results
