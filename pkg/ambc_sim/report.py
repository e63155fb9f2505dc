"""CSV result files and the run manifest."""

import csv
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import yaml

from ambc_sim import __version__
from ambc_sim.analysis import PathLossPoint
from ambc_sim.runner import BerCurve, BerPoint, EpsilonPoint, TheoryPoint

BER_HEADER = (
    "sweep_var", "value", "detector", "M", "Q", "N", "gamma_d_db", "delta_gamma_db",
    "fidelity", "bias_mode", "trials", "bits", "errors", "ber", "ci95",
)
THEORY_HEADER = ("sweep_var", "value", "M", "Q", "N", "gamma_d_db", "delta_gamma_db", "channels", "ber", "ci95")
EPSILON_HEADER = ("delta_gamma_db", "M", "samples", "epsilon", "ci95")
PATH_LOSS_HEADER = ("band", "frequency_hz", "distance_m", "loss_db")

_INT_FIELDS = {"M", "Q", "N", "trials", "bits", "errors"}
_STR_FIELDS = {"sweep_var", "detector", "fidelity", "bias_mode"}


class ResultWriteError(OSError):
    """A result file could not be written."""

    def __init__(self, path: Path, reason: Union[str, OSError]):
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path


def _cell(value: Any) -> str:
    # repr is the shortest string that parses back to the same float
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as e:
        raise ResultWriteError(path, e.strerror or e) from e
    return path


def write_results(curve: BerCurve, path: Path) -> Path:
    """Write a BER curve, one row per point (header only for an empty curve).

    Raises:
        ResultWriteError: If the file cannot be written
    """
    rows = (
        (p.sweep_var, p.value, p.detector, p.M, p.Q, p.N, p.gamma_d_db, p.delta_gamma_db,
         p.fidelity, p.bias_mode, p.trials, p.bits, p.errors, p.ber, p.ci95)
        for p in curve.points
    )
    return _write_rows(path, BER_HEADER, rows)


def read_results(path: Path, manifest: Optional[Path] = None) -> BerCurve:
    """Read a file written by :func:`write_results`.

    The CSV carries no ``capped`` or ``low_n`` columns, so both flags read back as
    False unless ``manifest`` points at the run's ``manifest.yaml``, whose
    flagged entries for this file restore them.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: If the header does not match
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Result file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != BER_HEADER:
            raise ValueError(f"{path} is not a BER result file (header {reader.fieldnames})")
        points = []
        for row in reader:
            kwargs: Dict[str, Any] = {}
            for name in BER_HEADER:
                if name in ("ber", "ci95"):
                    continue
                if name in _INT_FIELDS:
                    kwargs[name] = int(row[name])
                elif name in _STR_FIELDS:
                    kwargs[name] = row[name]
                else:
                    kwargs[name] = float(row[name])
            points.append(BerPoint(**kwargs))
    if manifest is not None:
        points = _restore_flags(points, path.name, Path(manifest))
    return BerCurve(points=tuple(points), label=path.stem)


def _restore_flags(points: List[BerPoint], name: str, manifest: Path) -> List[BerPoint]:
    with open(manifest, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    flags = {
        (entry["sweep_var"], float(entry["value"])): entry
        for entry in data.get("flagged", [])
        if entry.get("file") == name
    }
    restored = []
    for p in points:
        entry = flags.get((p.sweep_var, p.value))
        if entry:
            p = replace(p, capped=bool(entry.get("capped")), low_n=bool(entry.get("low_n")))
        restored.append(p)
    return restored


def write_theory(points: Sequence[TheoryPoint], path: Path) -> Path:
    rows = (
        (p.sweep_var, p.value, p.M, p.Q, p.N, p.gamma_d_db, p.delta_gamma_db, p.channels, p.ber, p.ci95)
        for p in points
    )
    return _write_rows(path, THEORY_HEADER, rows)


def write_epsilon(points: Sequence[EpsilonPoint], path: Path) -> Path:
    rows = ((p.delta_gamma_db, p.M, p.samples, p.epsilon, p.ci95) for p in points)
    return _write_rows(path, EPSILON_HEADER, rows)


def write_path_loss(curves: Dict[str, Sequence[PathLossPoint]], path: Path) -> Path:
    """Write path-loss curves keyed by band name."""
    rows = (
        (band, p.frequency, p.distance, p.loss)
        for band, points in curves.items()
        for p in points
    )
    return _write_rows(path, PATH_LOSS_HEADER, rows)


@dataclass
class Manifest:
    """Index of the files produced by one run."""

    preset: str
    scale: str
    seed: int
    files: List[str] = field(default_factory=list)
    flagged: List[Dict[str, Any]] = field(default_factory=list)

    def add_curve(self, path: Path, curve: BerCurve) -> None:
        self.files.append(Path(path).name)
        for p in curve.flagged:
            self.flagged.append({
                "file": Path(path).name,
                "sweep_var": p.sweep_var,
                "value": p.value,
                "errors": p.errors,
                "trials": p.trials,
                "capped": p.capped,
                "low_n": p.low_n,
            })


def write_manifest(manifest: Manifest, path: Path) -> Path:
    """Write the manifest as YAML.

    Raises:
        ResultWriteError: If the file cannot be written
    """
    data = {
        "preset": manifest.preset,
        "scale": manifest.scale,
        "seed": manifest.seed,
        "version": __version__,
        "created": datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%S UTC"),
        "files": list(manifest.files),
        "flagged": list(manifest.flagged),
    }
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            yaml.safe_dump(data, f, sort_keys=False)
    except OSError as e:
        raise ResultWriteError(path, e.strerror or e) from e
    return path
