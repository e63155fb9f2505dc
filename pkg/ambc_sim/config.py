"""Experiment configuration: keys, defaults and resolution to system parameters."""

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Mapping, Optional, Tuple

from ambc_sim.model import SystemParams
from ambc_sim.phy import Fidelity

SWEEP_VARIABLES = ("gamma_r_db", "gamma_d_db", "delta_gamma_db")
DETECTORS = ("ml_exact", "ml_approx", "linear", "min_distance", "differential")
BIAS_MODES = ("perfect", "estimated")
FIDELITIES = tuple(f.value for f in Fidelity)

COHERENT_FRAME_BLOCKS = 1
DIFFERENTIAL_FRAME_BLOCKS = 16


class ConfigError(ValueError):
    """Invalid configuration, optionally tied to a key and a source line."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        location = []
        if key is not None:
            location.append(f"key '{key}'")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    """One BER experiment: scenario, sweep, detector and stop rule."""

    M: int = 2
    Q: int = 1
    N: int = 40_000
    gamma_d_db: float = 15.0
    delta_gamma_db: float = 40.0
    alpha_db: float = 1.1
    sigma2: float = 1.0
    power_normalized: bool = False
    sweep: str = "gamma_r_db"
    grid: Tuple[float, ...] = (5.0, 10.0, 15.0)
    gamma_r_db: Optional[float] = None
    detector: str = "linear"
    fidelity: str = Fidelity.CHI_SQUARE.value
    bias_mode: str = "perfect"
    n_bias: Optional[int] = None
    frame_blocks: Optional[int] = None
    diff_init: Tuple[int, int] = (1, 1)
    master_seed: int = 2021
    max_trials: int = 1_000_000
    target_bit_errors: int = 200
    batch_trials: int = 2_000
    kappa_samples: int = 1_000_000
    theory_channels: int = 10_000

    @property
    def is_differential(self) -> bool:
        return self.detector == "differential"

    @property
    def blocks_per_frame(self) -> int:
        if self.frame_blocks is not None:
            return self.frame_blocks
        return DIFFERENTIAL_FRAME_BLOCKS if self.is_differential else COHERENT_FRAME_BLOCKS

    def pilot_length(self, n: int) -> int:
        """Silent-pilot averaging length (defaults to the data averaging length)."""
        return self.n_bias if self.n_bias is not None else n

    def params(
        self,
        N: Optional[int] = None,
        gamma_d_db: Optional[float] = None,
        delta_gamma_db: Optional[float] = None,
    ) -> SystemParams:
        """SystemParams of this config with optional per-point overrides."""
        return SystemParams.from_db(
            M=self.M,
            Q=self.Q,
            N=self.N if N is None else N,
            gamma_d_db=self.gamma_d_db if gamma_d_db is None else gamma_d_db,
            delta_gamma_db=self.delta_gamma_db if delta_gamma_db is None else delta_gamma_db,
            alpha_db=self.alpha_db,
            sigma2=self.sigma2,
            power_normalized=self.power_normalized,
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["grid"] = list(self.grid)
        data["diff_init"] = list(self.diff_init)
        return data


CONFIG_KEYS: Dict[str, str] = {
    "M": "Tag antennas (1, 2, 4 or 8)",
    "Q": "Reader antennas",
    "N": "ambient symbols averaged per Tag symbol (fixed unless the sweep resolves it from gamma_r_db)",
    "gamma_d_db": "direct link SNR P_s/sigma2 in dB",
    "delta_gamma_db": "relative SNR 1/(alpha^2 A_TR^2) in dB",
    "alpha_db": "Tag hardware loss in dB",
    "sigma2": "normalized noise power",
    "power_normalized": "scale Tag symbols to +-1/sqrt(M)",
    "sweep": "swept variable: " + ", ".join(SWEEP_VARIABLES),
    "grid": "sweep values in dB, e.g. [5, 10, 15]",
    "gamma_r_db": "fixed receive SNR (dB) that sets N in a delta_gamma_db sweep",
    "detector": "detector: " + ", ".join(DETECTORS),
    "fidelity": "observation fidelity: " + ", ".join(FIDELITIES),
    "bias_mode": "bias at the Reader: " + ", ".join(BIAS_MODES),
    "n_bias": "silent-pilot averaging length for estimated bias (default: N)",
    "frame_blocks": f"blocks per channel realization (default: {COHERENT_FRAME_BLOCKS} coherent, "
                    f"{DIFFERENTIAL_FRAME_BLOCKS} differential)",
    "diff_init": "initial differential symbol pair",
    "master_seed": "master seed of every random substream",
    "max_trials": "maximum frames per point",
    "target_bit_errors": "stop a point once this many bit errors are counted",
    "batch_trials": "frames per work item",
    "kappa_samples": "Monte Carlo samples for the receive-SNR factor kappa",
    "theory_channels": "channel draws averaged by the theoretical BER",
}

_DEFAULTS = ExperimentConfig()
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def default_value(key: str) -> Any:
    return getattr(_DEFAULTS, key)


def _coerce(key: str, value: Any) -> Any:
    default = default_value(key)
    if value is None:
        if key in ("gamma_r_db", "n_bias", "frame_blocks"):
            return None
        raise ConfigError("value is required", key=key)
    if key in ("grid", "diff_init"):
        items = value if isinstance(value, (list, tuple)) else [value]
        caster = float if key == "grid" else int
        try:
            return tuple(caster(v) for v in items)
        except (TypeError, ValueError):
            raise ConfigError(f"expected a list of numbers, got {value!r}", key=key) from None
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "yes", "no", "1", "0"):
            return value.lower() in ("true", "yes", "1")
        raise ConfigError(f"expected true or false, got {value!r}", key=key)
    if key in ("M", "Q", "N", "n_bias", "frame_blocks", "master_seed", "max_trials",
               "target_bit_errors", "batch_trials", "kappa_samples", "theory_channels"):
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ConfigError(f"expected an integer, got {value!r}", key=key)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"expected an integer, got {value!r}", key=key) from None
    if key in ("gamma_d_db", "delta_gamma_db", "alpha_db", "sigma2", "gamma_r_db"):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"expected a number, got {value!r}", key=key) from None
    return str(value)


def config_from_mapping(
    values: Mapping[str, Any],
    base: Optional[ExperimentConfig] = None,
    lines: Optional[Mapping[str, int]] = None,
) -> ExperimentConfig:
    """Overlay typed values on ``base`` (defaults when omitted).

    Raises:
        ConfigError: For unknown keys or values of the wrong type
    """
    lines = lines or {}
    updates = {}
    for key, value in values.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key; valid keys: {', '.join(CONFIG_KEYS)}",
                              key=key, line=lines.get(key))
        try:
            updates[key] = _coerce(key, value)
        except ConfigError as e:
            raise ConfigError(str(e).split(": ", 1)[-1], key=key, line=lines.get(key)) from None
    return replace(base or _DEFAULTS, **updates)


def config_help_table() -> str:
    """One line per config key with its default, for ``--help``."""
    rows = []
    for key, text in CONFIG_KEYS.items():
        default = default_value(key)
        if isinstance(default, tuple):
            default = list(default)
        rows.append(f"  {key:<18} {text} [default: {default}]")
    return "\n".join(rows)
