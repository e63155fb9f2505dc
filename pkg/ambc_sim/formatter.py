"""Console output with colors and tables."""

from pathlib import Path
from typing import Dict, Mapping, Sequence

from rich.console import Console
from rich.table import Table

from ambc_sim.analysis import PathLossPoint
from ambc_sim.config import ExperimentConfig
from ambc_sim.runner import BerCurve, BerPoint, EpsilonPoint, TheoryPoint

console = Console(highlight=False)


class Formatter:
    """Format simulator output for the CLI."""

    def print_run_header(self, name: str, out_dir: Path, seed: int, scale: str) -> None:
        """Print the run header.

        Args:
            name: Preset or config name
            out_dir: Directory receiving the CSV files
            seed: Master seed
            scale: Trial-count scale
        """
        console.print(f"\n[bold cyan]Running experiment:[/bold cyan] {name}")
        console.print(f"[dim]Output: {out_dir}  seed={seed}  scale={scale}[/dim]")
        console.rule()

    def print_curve_header(self, label: str) -> None:
        console.print(f"\n[bold]Curve:[/bold] {label}")

    def print_point(self, point: BerPoint) -> None:
        """Print one finished point; capped or low-N points are marked."""
        marks = []
        if point.capped:
            marks.append("capped")
        if point.low_n:
            marks.append("N<30")
        status = "[yellow]LOW[/yellow]" if marks else "[green]OK[/green]"
        note = f" [yellow]({', '.join(marks)})[/yellow]" if marks else ""
        console.print(
            f"  {status} {point.sweep_var}={point.value:g} N={point.N} "
            f"BER={point.ber:.3e} [dim]({point.errors}/{point.bits} bits, {point.trials} frames)[/dim]{note}"
        )

    def print_curve(self, curve: BerCurve) -> None:
        """Print a BER curve as a table."""
        table = Table(title=curve.label or "BER")
        table.add_column("Value", style="cyan", justify="right")
        table.add_column("N", justify="right")
        table.add_column("Trials", justify="right")
        table.add_column("Errors", justify="right")
        table.add_column("BER", style="green", justify="right")
        table.add_column("CI95", style="dim", justify="right")

        for p in curve.points:
            table.add_row(f"{p.value:g}", str(p.N), str(p.trials), str(p.errors), f"{p.ber:.3e}", f"{p.ci95:.1e}")

        console.print(table)

    def print_theory(self, points: Sequence[TheoryPoint], label: str = "Theory") -> None:
        table = Table(title=label)
        table.add_column("Value", style="cyan", justify="right")
        table.add_column("N", justify="right")
        table.add_column("BER", style="green", justify="right")
        table.add_column("CI95", style="dim", justify="right")
        for p in points:
            table.add_row(f"{p.value:g}", str(p.N), f"{p.ber:.3e}", f"{p.ci95:.1e}")
        console.print(table)

    def print_epsilon(self, points: Sequence[EpsilonPoint]) -> None:
        table = Table(title="Linearization error")
        table.add_column("Delta gamma (dB)", style="cyan", justify="right")
        table.add_column("M", justify="right")
        table.add_column("epsilon", style="green", justify="right")
        table.add_column("CI95", style="dim", justify="right")
        for p in points:
            table.add_row(f"{p.delta_gamma_db:g}", str(p.M), f"{p.epsilon:.4e}", f"{p.ci95:.1e}")
        console.print(table)

    def print_path_loss(self, curves: Mapping[str, Sequence[PathLossPoint]]) -> None:
        table = Table(title="Free-space path loss")
        table.add_column("Band", style="cyan")
        table.add_column("f (MHz)", justify="right")
        table.add_column("d = first (dB)", justify="right")
        table.add_column("d = last (dB)", style="green", justify="right")
        for band, points in curves.items():
            if not points:
                continue
            table.add_row(
                band, f"{points[0].frequency / 1e6:.1f}", f"{points[0].loss:.2f}", f"{points[-1].loss:.2f}"
            )
        console.print(table)

    def print_presets(self, presets: Dict[str, str]) -> None:
        """Print preset names and descriptions."""
        for name, description in presets.items():
            console.print(f"  [cyan]{name}[/cyan] {description}")

    def print_config(self, config: ExperimentConfig) -> None:
        table = Table(title="Configuration")
        table.add_column("Key", style="cyan")
        table.add_column("Value", style="yellow")
        for key, value in config.to_dict().items():
            table.add_row(key, str(value))
        console.print(table)

    def print_success(self, total_time: float, files: Sequence[str]) -> None:
        """Print the success footer.

        Args:
            total_time: Total execution time in seconds
            files: Files written
        """
        console.print(f"\n[green]OK Wrote {len(files)} file(s) in {total_time:.1f}s[/green]")

    def print_failure(self, error: str) -> None:
        console.print(f"\n[red]FAIL Experiment failed: {error}[/red]")
