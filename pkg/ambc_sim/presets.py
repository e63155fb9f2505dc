"""Named experiment presets loaded from the bundled ``presets.yaml``."""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import yaml

from ambc_sim.analysis import band_center, path_loss_curve
from ambc_sim.config import ConfigError, ExperimentConfig, config_from_mapping
from ambc_sim.report import Manifest, write_epsilon, write_manifest, write_path_loss, write_results, write_theory
from ambc_sim.runner import run_epsilon, run_sweep, run_theory

if TYPE_CHECKING:
    from ambc_sim.formatter import Formatter

logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).with_name("presets.yaml")
SCALES = ("quick", "full")
SCALE_ALIASES = {"paper": "full"}


@dataclass(frozen=True)
class CurveJob:
    """One output curve: a simulated BER sweep or its closed-form counterpart."""

    label: str
    kind: str
    config: ExperimentConfig


@dataclass(frozen=True)
class EpsilonJob:
    delta_gamma_db: Tuple[float, ...]
    antennas: Tuple[int, ...]
    samples: int
    config: ExperimentConfig


@dataclass(frozen=True)
class PathLossJob:
    bands: Tuple[str, ...]
    distances: Tuple[float, ...]


@dataclass(frozen=True)
class Preset:
    """A named experiment resolved at one scale."""

    name: str
    description: str
    scale: str
    curves: Tuple[CurveJob, ...] = ()
    epsilon: Optional[EpsilonJob] = None
    path_loss: Optional[PathLossJob] = None

    @property
    def master_seed(self) -> int:
        if self.curves:
            return self.curves[0].config.master_seed
        if self.epsilon:
            return self.epsilon.config.master_seed
        return ExperimentConfig().master_seed


@lru_cache(maxsize=None)
def _catalogue() -> Dict[str, Any]:
    with open(PRESETS_PATH, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def describe_presets() -> Dict[str, str]:
    """Preset names mapped to their one-line descriptions."""
    return {name: entry.get("description", "") for name, entry in _catalogue()["presets"].items()}


def _suffix(series: Mapping[str, Any]) -> str:
    return "".join(f"_{key}{value:g}" if isinstance(value, (int, float)) else f"_{key}{value}"
                   for key, value in series.items())


def _scaled(config: ExperimentConfig, scale: Mapping[str, Any]) -> ExperimentConfig:
    stride = int(scale.get("grid_stride", 1))
    return replace(
        config,
        grid=tuple(config.grid[::stride]),
        max_trials=int(scale["max_trials"]),
        target_bit_errors=int(scale["target_bit_errors"]),
        kappa_samples=int(scale["kappa_samples"]),
        theory_channels=int(scale["theory_channels"]),
    )


def build_preset(
    name: str,
    scale: str = "quick",
    overrides: Optional[Mapping[str, Any]] = None,
) -> Preset:
    """Resolve a preset to concrete curve configurations.

    Precedence per curve: defaults < preset base < pair, detector and series
    keys < scale < ``overrides``.

    Raises:
        ConfigError: For an unknown preset or scale, or invalid overrides
    """
    scale = SCALE_ALIASES.get(scale, scale)
    catalogue = _catalogue()
    presets = catalogue["presets"]
    if name not in presets:
        raise ConfigError(f"unknown preset '{name}'; available presets: {', '.join(presets)}")
    if scale not in SCALES:
        raise ConfigError(f"unknown scale '{scale}'; choose one of {', '.join(SCALES)}")

    entry = presets[name]
    scale_values = {**catalogue["scales"][scale], **entry.get("scales", {}).get(scale, {})}
    overrides = dict(overrides or {})
    base = config_from_mapping(entry.get("base", {}))

    curves: List[CurveJob] = []
    for series in entry.get("series", [{}]):
        for m, q in entry.get("antennas", []):
            pair = config_from_mapping({"M": m, "Q": q, **series}, base=base)
            for detector in entry.get("detectors", []):
                cfg = _scaled(replace(pair, detector=detector), scale_values)
                cfg = config_from_mapping(overrides, base=cfg)
                curves.append(CurveJob(f"{name}_M{m}_Q{q}_{detector}{_suffix(series)}", "ber", cfg))
            if entry.get("theory"):
                cfg = _scaled(replace(pair, detector="linear"), scale_values)
                cfg = config_from_mapping(overrides, base=cfg)
                curves.append(CurveJob(f"{name}_M{m}_Q{q}_theory{_suffix(series)}", "theory", cfg))

    epsilon = None
    if "epsilon" in entry:
        spec = entry["epsilon"]
        cfg = config_from_mapping(overrides, base=base)
        epsilon = EpsilonJob(
            delta_gamma_db=tuple(float(v) for v in spec["delta_gamma_db"]),
            antennas=tuple(int(m) for m in spec["antennas"]),
            samples=int(scale_values["epsilon_samples"]),
            config=cfg,
        )

    path_loss = None
    if "path_loss" in entry:
        spec = entry["path_loss"]
        d = spec["distances"]
        distances = np.logspace(math.log10(d["start"]), math.log10(d["stop"]), int(d["count"]))
        path_loss = PathLossJob(bands=tuple(spec["bands"]), distances=tuple(float(x) for x in distances))

    return Preset(
        name=name,
        description=entry.get("description", ""),
        scale=scale,
        curves=tuple(curves),
        epsilon=epsilon,
        path_loss=path_loss,
    )


def run_preset(
    preset: Preset,
    out_dir: Path,
    workers: int = 1,
    formatter: Optional["Formatter"] = None,
) -> Manifest:
    """Run every job of a preset and write one CSV per curve plus the manifest.

    Returns:
        The manifest that was written to ``out_dir/manifest.yaml``
    """
    out_dir = Path(out_dir)
    manifest = Manifest(preset=preset.name, scale=preset.scale, seed=preset.master_seed)

    for job in preset.curves:
        path = out_dir / f"{job.label}.csv"
        logger.info("running %s", job.label)
        if formatter:
            formatter.print_curve_header(job.label)
        if job.kind == "theory":
            points = run_theory(job.config)
            write_theory(points, path)
            manifest.files.append(path.name)
            if formatter:
                formatter.print_theory(points, label=job.label)
            continue
        curve = run_sweep(
            job.config,
            workers=workers,
            progress=formatter.print_point if formatter else None,
            label=job.label,
        )
        write_results(curve, path)
        manifest.add_curve(path, curve)

    if preset.epsilon:
        job = preset.epsilon
        points = run_epsilon(job.config, job.delta_gamma_db, job.antennas, job.samples)
        path = write_epsilon(points, out_dir / f"{preset.name}_epsilon.csv")
        manifest.files.append(path.name)
        if formatter:
            formatter.print_epsilon(points)

    if preset.path_loss:
        job = preset.path_loss
        curves = {band: path_loss_curve(band_center(band), job.distances) for band in job.bands}
        path = write_path_loss(curves, out_dir / f"{preset.name}_path_loss.csv")
        manifest.files.append(path.name)
        if formatter:
            formatter.print_path_loss(curves)

    write_manifest(manifest, out_dir / "manifest.yaml")
    return manifest
