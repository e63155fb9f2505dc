"""Experiment configuration validation."""

import math
from typing import List

from ambc_sim.config import BIAS_MODES, DETECTORS, FIDELITIES, SWEEP_VARIABLES, ExperimentConfig
from ambc_sim.model import SUPPORTED_TAG_ANTENNAS


class ConfigValidator:
    """Check an ExperimentConfig against the model's existence and range rules."""

    def validate(self, config: ExperimentConfig) -> List[str]:
        """Validate a configuration and return a list of errors.

        Args:
            config: Fully merged configuration

        Returns:
            List of error messages (empty if valid)
        """
        errors = []

        if config.M not in SUPPORTED_TAG_ANTENNAS:
            errors.append(
                f"M={config.M}: a real orthogonal design exists only for M = 2, 4, 8 "
                "(M = 1 is the single-antenna case)"
            )
        if config.Q < 1:
            errors.append(f"Q must be at least 1, got {config.Q}")
        if config.N < 1:
            errors.append(f"N must be at least 1, got {config.N}")
        if config.sigma2 <= 0:
            errors.append(f"sigma2 must be positive, got {config.sigma2}")
        if config.alpha_db < 0:
            errors.append(f"alpha_db is a loss and must be non-negative, got {config.alpha_db}")

        if config.sweep not in SWEEP_VARIABLES:
            errors.append(f"sweep must be one of {', '.join(SWEEP_VARIABLES)}, got '{config.sweep}'")
        if config.detector not in DETECTORS:
            errors.append(f"detector must be one of {', '.join(DETECTORS)}, got '{config.detector}'")
        if config.fidelity not in FIDELITIES:
            errors.append(f"fidelity must be one of {', '.join(FIDELITIES)}, got '{config.fidelity}'")
        if config.bias_mode not in BIAS_MODES:
            errors.append(f"bias_mode must be one of {', '.join(BIAS_MODES)}, got '{config.bias_mode}'")

        if not config.grid:
            errors.append("grid must contain at least one value")
        elif not all(math.isfinite(v) for v in config.grid):
            errors.append("grid values must be finite")

        self._validate_relative_snr(config, errors)
        self._validate_framing(config, errors)
        self._validate_stop_rule(config, errors)

        return errors

    def _validate_relative_snr(self, config: ExperimentConfig, errors: List[str]) -> None:
        """Delta-gamma must leave room for the hardware loss (A_TR <= 1)."""
        values = [config.delta_gamma_db]
        if config.sweep == "delta_gamma_db":
            values = list(config.grid)
        for value in values:
            if math.isfinite(value) and value < config.alpha_db:
                errors.append(
                    f"delta_gamma_db={value} is below the hardware loss alpha_db={config.alpha_db}"
                )

    def _validate_framing(self, config: ExperimentConfig, errors: List[str]) -> None:
        if config.is_differential:
            if config.M != 2:
                errors.append(f"differential detection supports M = 2 only, got M={config.M}")
            if config.blocks_per_frame < 2:
                errors.append(
                    f"differential frames need a reference block plus data: frame_blocks >= 2, "
                    f"got {config.blocks_per_frame}"
                )
            if len(config.diff_init) != 2 or any(v not in (-1, 1) for v in config.diff_init):
                errors.append(f"diff_init must be a pair in {{+1, -1}}, got {list(config.diff_init)}")
        elif config.blocks_per_frame < 1:
            errors.append(f"frame_blocks must be at least 1, got {config.blocks_per_frame}")

        if config.n_bias is not None and config.n_bias < 1:
            errors.append(f"n_bias must be at least 1, got {config.n_bias}")

    def _validate_stop_rule(self, config: ExperimentConfig, errors: List[str]) -> None:
        for key in ("max_trials", "target_bit_errors", "batch_trials"):
            if getattr(config, key) < 1:
                errors.append(f"{key} must be positive, got {getattr(config, key)}")
        if config.kappa_samples < 10_000:
            errors.append(f"kappa_samples must be at least 10^4, got {config.kappa_samples}")
        if config.theory_channels < 1000:
            errors.append(f"theory_channels must be at least 1000, got {config.theory_channels}")
