"""Plain-text ``key = value`` config file parsing."""

import re
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple

import yaml

from ambc_sim.config import ConfigError, ExperimentConfig, config_from_mapping

_SECTION = re.compile(r"^\[[^\]]*\]$")
_ASSIGNMENT = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(.*)$")


def parse_value(text: str, key: Optional[str] = None, line: Optional[int] = None) -> Any:
    """Type one value the way YAML would (``2``, ``1.1``, ``true``, ``[5, 10]``)."""
    if text == "":
        return None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse value {text!r}: {e}", key=key, line=line) from None


def parse_assignment(text: str, line: Optional[int] = None) -> Tuple[str, Any]:
    """Split one ``key=value`` override into its key and typed value."""
    match = _ASSIGNMENT.match(text.strip())
    if not match:
        raise ConfigError(f"expected key=value, got {text!r}", line=line)
    key, raw = match.group(1), match.group(2).strip()
    return key, parse_value(raw, key=key, line=line)


class ConfigParser:
    """Parse INI-style experiment config files."""

    def __init__(self, config_path: Path):
        """Initialize the parser with a config file path.

        Args:
            config_path: Path to the config file
        """
        self.config_path = config_path

    def read(self) -> Tuple[Dict[str, Any], Dict[str, int]]:
        """Read raw typed values and the line each key came from.

        Raises:
            FileNotFoundError: If the config file doesn't exist
            ConfigError: On malformed lines or duplicate keys
        """
        if not self.config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self.config_path}")

        with open(self.config_path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()

        values: Dict[str, Any] = {}
        origins: Dict[str, int] = {}
        for lineno, raw in enumerate(lines, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text or _SECTION.match(text):
                continue
            key, value = parse_assignment(text, line=lineno)
            if key in values:
                raise ConfigError(f"duplicate key (first set on line {origins[key]})", key=key, line=lineno)
            values[key] = value
            origins[key] = lineno
        return values, origins

    def parse(self, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
        """Parse the file into an ExperimentConfig overlaid on ``base``.

        Returns:
            ExperimentConfig (an empty file yields the defaults)

        Raises:
            FileNotFoundError: If the config file doesn't exist
            ConfigError: For malformed lines, unknown keys or mistyped values
        """
        values, origins = self.read()
        return config_from_mapping(values, base=base, lines=origins)


def apply_overrides(config: ExperimentConfig, overrides: Iterable[str]) -> ExperimentConfig:
    """Apply ``--set key=value`` overrides in order."""
    values: Dict[str, Any] = {}
    for item in overrides:
        key, value = parse_assignment(item)
        values[key] = value
    return config_from_mapping(values, base=config)
