"""Rich terminal output formatting."""

import json
import math
from collections.abc import Sequence

from rich.console import Console
from rich.table import Table

from commlsd.models import ComparisonReport, EsdSample, LsdCurve


class OutputFormatter:
    """Format curves, samples and comparison reports for the terminal."""

    def __init__(self, console: Console | None = None):
        """Initialize with Rich console."""
        self.console = console or Console()

    def format_number(self, value: float, digits: int = 6) -> str:
        """Fixed precision, with ∞ for infinite values."""
        if math.isinf(value):
            return "∞"
        return f"{value:.{digits}f}"

    def build_curve_table(self, curve: LsdCurve) -> Table:
        """Summary of one LSD curve."""
        table = Table(title=f"LSD ({curve.kernel.value}, {curve.method})")
        table.add_column("Quantity", style="cyan")
        table.add_column("Value", justify="right", style="green")

        lower, upper = curve.support
        center = curve.density[curve.grid.size // 2]
        table.add_row("c", f"{curve.c:g}")
        table.add_row("support L", self.format_number(lower))
        table.add_row("support U", self.format_number(upper))
        table.add_row("point mass at 0", self.format_number(curve.point_mass_zero))
        table.add_row("density at 0", self.format_number(center))
        table.add_row("total mass", self.format_number(curve.total_mass()))
        table.add_row("grid points", str(curve.grid.size))
        return table

    def build_sample_table(self, samples: Sequence[EsdSample]) -> Table:
        """One row per simulated replicate."""
        table = Table(title="Simulated spectra")
        table.add_column("#", justify="right", style="cyan")
        table.add_column("p", justify="right")
        table.add_column("n", justify="right")
        table.add_column("min", justify="right")
        table.add_column("max", justify="right")
        table.add_column("mean", justify="right", style="dim")

        for sample in samples:
            table.add_row(
                str(sample.replicate),
                str(sample.p),
                str(sample.n),
                self.format_number(float(sample.coords[0]), 4),
                self.format_number(float(sample.coords[-1]), 4),
                self.format_number(float(sample.coords.mean()), 4),
            )
        return table

    def build_report_table(self, reports: Sequence[ComparisonReport]) -> Table:
        """One row per comparison report."""
        table = Table(title="Comparison")
        table.add_column("#", justify="right", style="cyan")
        table.add_column("KS", justify="right", style="green")
        table.add_column("Lévy", justify="right")
        table.add_column("L1 hist", justify="right")
        table.add_column("mass at 0", justify="right")
        table.add_column("outside support", justify="right", style="dim")

        for i, report in enumerate(reports):
            table.add_row(
                str(i),
                self.format_number(report.ks, 4),
                self.format_number(report.levy, 4),
                self.format_number(report.l1_hist, 4),
                self.format_number(report.point_mass_est, 4),
                self.format_number(report.support_violation_frac, 4),
            )
        return table

    def build_point_mass_table(self, rows: Sequence[tuple[float, float, float]]) -> Table:
        table = Table(title="Point mass at 0")
        table.add_column("c", justify="right", style="cyan")
        table.add_column("mass", justify="right", style="green")
        table.add_column("lim h(−ε)", justify="right")
        for c, mass, h_limit in rows:
            table.add_row(f"{c:g}", self.format_number(mass), self.format_number(h_limit))
        return table

    def print_table(self, table: Table):
        self.console.print(table)

    def curve_to_dict(self, curve: LsdCurve) -> dict:
        """Convert an LsdCurve summary to a JSON-serializable dict."""
        return {
            "c": curve.c,
            "kernel": curve.kernel.value,
            "method": curve.method,
            "support": list(curve.support),
            "point_mass_zero": curve.point_mass_zero,
            "total_mass": curve.total_mass(),
        }

    def to_json(self, payload) -> str:
        """JSON string; infinities are written as null."""
        return json.dumps(_finite(payload), indent=2)


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_finite(v) for v in value]
    return value
