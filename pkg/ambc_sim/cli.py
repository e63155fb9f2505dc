"""CLI interface for ambc-sim."""

import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import click
from rich.console import Console
from rich.logging import RichHandler

from ambc_sim import __version__
from ambc_sim.config import ConfigError, config_from_mapping, config_help_table
from ambc_sim.formatter import Formatter
from ambc_sim.parser import ConfigParser, parse_assignment
from ambc_sim.presets import SCALE_ALIASES, SCALES, build_preset, describe_presets, run_preset
from ambc_sim.report import Manifest, write_manifest, write_results
from ambc_sim.runner import check_config, run_sweep
from ambc_sim.validator import ConfigValidator

console = Console(highlight=False)

EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_FAILURE = 3

RUN_EPILOG = "\b\nConfiguration keys (config file or --set key=value):\n" + config_help_table()


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _flag_values(
    seed: Optional[int],
    detector: Optional[str],
    fidelity: Optional[str],
    bias_mode: Optional[str],
    max_trials: Optional[int],
    target_errors: Optional[int],
) -> Dict[str, Any]:
    flags = {
        "master_seed": seed,
        "detector": detector,
        "fidelity": fidelity,
        "bias_mode": bias_mode,
        "max_trials": max_trials,
        "target_bit_errors": target_errors,
    }
    return {key: value for key, value in flags.items() if value is not None}


@click.group()
@click.version_option(version=__version__)
def cli() -> None:
    """Monte Carlo BER simulator for MIMO ambient backscatter links."""


@cli.command(epilog=RUN_EPILOG)
@click.option("--config", "-c", "config_path", type=click.Path(exists=True, dir_okay=False),
              envvar="AMBC_CONFIG", help="key = value config file")
@click.option("--preset", "-p", help="Named experiment preset (see list-presets)")
@click.option("--seed", type=int, envvar="AMBC_SEED", help="Master seed")
@click.option("--workers", "-w", type=click.IntRange(min=1), default=1, show_default=True,
              envvar="AMBC_WORKERS", help="Worker processes")
@click.option("--scale", type=click.Choice(SCALES + tuple(SCALE_ALIASES)), default="quick",
              show_default=True, envvar="AMBC_SCALE", help="Trial-count scale of presets (paper = full)")
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), default="results", show_default=True,
              envvar="AMBC_OUT_DIR", help="Directory for CSV files and the manifest")
@click.option("--detector", envvar="AMBC_DETECTOR", help="Detector override")
@click.option("--fidelity", envvar="AMBC_FIDELITY", help="Observation fidelity override")
@click.option("--bias-mode", envvar="AMBC_BIAS_MODE", help="Bias mode override")
@click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE", help="Override any config key")
@click.option("--max-trials", type=int, help="Maximum frames per point")
@click.option("--target-errors", type=int, help="Bit errors that end a point")
@click.option("--verbose", "-v", is_flag=True, help="Show debug logging")
def run(
    config_path: Optional[str],
    preset: Optional[str],
    seed: Optional[int],
    workers: int,
    scale: str,
    out_dir: str,
    detector: Optional[str],
    fidelity: Optional[str],
    bias_mode: Optional[str],
    assignments: Tuple[str, ...],
    max_trials: Optional[int],
    target_errors: Optional[int],
    verbose: bool,
) -> None:
    """Run a BER sweep from a config file or a named preset."""
    _setup_logging(verbose)
    formatter = Formatter()
    start_time = time.time()
    try:
        out = Path(out_dir)
        flags = _flag_values(seed, detector, fidelity, bias_mode, max_trials, target_errors)
        file_values: Dict[str, Any] = {}
        origins: Dict[str, int] = {}
        if config_path:
            file_values, origins = ConfigParser(Path(config_path)).read()
        cli_values: Dict[str, Any] = {}
        for item in assignments:
            key, value = parse_assignment(item)
            cli_values[key] = value
        cli_values.update(flags)

        if preset:
            overrides = {**file_values, **cli_values}
            if "detector" in overrides:
                raise ConfigError("a preset fixes its detectors; drop --detector", key="detector")
            resolved = build_preset(preset, scale=scale, overrides=overrides)
            for job in resolved.curves:
                check_config(job.config)
            formatter.print_run_header(resolved.name, out, resolved.master_seed, resolved.scale)
            manifest = run_preset(resolved, out, workers=workers, formatter=formatter)
        else:
            config = config_from_mapping(cli_values, base=config_from_mapping(file_values, lines=origins))
            check_config(config)
            name = Path(config_path).stem if config_path else "experiment"
            formatter.print_run_header(name, out, config.master_seed, "config")
            curve = run_sweep(config, workers=workers, progress=formatter.print_point, label=name)
            path = write_results(curve, out / f"{name}.csv")
            manifest = Manifest(preset=name, scale="config", seed=config.master_seed)
            manifest.add_curve(path, curve)
            write_manifest(manifest, out / "manifest.yaml")
            formatter.print_curve(curve)
    except ConfigError as e:
        console.print(f"[red]Error:[/red] {e}")
        sys.exit(EXIT_CONFIG_ERROR)
    except Exception as e:
        formatter.print_failure(str(e))
        sys.exit(EXIT_RUNTIME_FAILURE)

    if manifest.flagged:
        console.print(f"[yellow]{len(manifest.flagged)} low-confidence point(s) listed in the manifest[/yellow]")
    formatter.print_success(time.time() - start_time, manifest.files)


@cli.command(name="list-presets")
def list_presets() -> None:
    """List named experiment presets."""
    try:
        Formatter().print_presets(describe_presets())
    except Exception as e:
        console.print(f"[red]Error:[/red] {str(e)}")
        sys.exit(EXIT_RUNTIME_FAILURE)


@cli.command()
@click.argument("config_paths", nargs=-1, type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--show", is_flag=True, help="Print the merged configuration")
def validate(config_paths: Tuple[str, ...], show: bool) -> None:
    """Validate config files and catch invalid combinations."""
    validator = ConfigValidator()
    formatter = Formatter()
    all_valid = True

    for config_path in config_paths:
        path = Path(config_path)
        try:
            config = ConfigParser(path).parse()
            errors = validator.validate(config)
        except ConfigError as e:
            config = None
            errors = [str(e)]

        if errors:
            all_valid = False
            console.print(f"\n[red]FAIL[/red] {path}")
            for error in errors:
                console.print(f"  [red]-[/red] {error}")
        else:
            console.print(f"[green]OK[/green] {path}")
            if show and config is not None:
                formatter.print_config(config)

    if not all_valid:
        console.print("\n[red]Some configs have errors[/red]")
        sys.exit(EXIT_CONFIG_ERROR)
    console.print("\n[green]All configs are valid![/green]")


def main() -> None:
    """Entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
