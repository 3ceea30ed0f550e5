"""CLI entry point for commlsd."""

import functools
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from commlsd import __version__
from commlsd.config import get_config
from commlsd.errors import (
    ConfigError,
    DegenerateSpectrum,
    DomainError,
    EigensolverError,
    GridSolveError,
    NoConvergence,
    RootSelectionAmbiguity,
)
from commlsd.export import ArtifactWriter, read_curve, read_sample
from commlsd.identity_lsd import closed_form_curve
from commlsd.measures import InversionConfig, read_spectral_measure
from commlsd.models import EntryDistribution, GridSpec, KernelTag
from commlsd.output import OutputFormatter
from commlsd.simulate import EnsembleConfig, simulate_replicates
from commlsd.solver import FixedPointConfig, lsd_curve, point_mass_sweep
from commlsd.stats import aggregate, compare

console = Console()
logger = logging.getLogger("commlsd")

EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_SOLVER = 4
EXIT_THRESHOLD = 5

KERNEL_CHOICES = ["skew", "hermitian", "minus", "plus"]


@dataclass
class RunConfig:
    """Global options shared by all subcommands."""

    out_dir: str
    fmt: str = "csv"
    threads: int = 1
    seed: int = 0
    verbose: bool = False

    def writer(self) -> ArtifactWriter:
        return ArtifactWriter(self.out_dir, self.fmt)


def _setup_logging(verbose: bool):
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        logger.addHandler(RichHandler(console=Console(stderr=True), show_path=False))
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def handle_errors(func):
    """Map library exceptions onto the exit-code contract."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except DegenerateSpectrum as e:
            console.print(f"[red]Degenerate: LSD is δ₀ ({e})[/red]")
            ctx.exit(EXIT_DEGENERATE)
        except GridSolveError as e:
            points = ", ".join(f"{x:g}" for x in e.failed_x)
            console.print(f"[red]Solver error: {e} at x = {points}[/red]")
            ctx.exit(EXIT_SOLVER)
        except (NoConvergence, RootSelectionAmbiguity, EigensolverError) as e:
            console.print(f"[red]Solver error: {e}[/red]")
            ctx.exit(EXIT_SOLVER)
        except (DomainError, ConfigError) as e:
            console.print(f"[red]Error: {e}[/red]")
            ctx.exit(EXIT_USAGE)

    return wrapper


def _finish(run: RunConfig, writer: ArtifactWriter, command: str, parameters: dict):
    writer.write_manifest(command, parameters, asdict(run))
    if run.fmt == "csv":
        console.print(f"[dim]Wrote {len(writer.artifacts)} file(s) to {writer.out_dir}[/dim]")


@click.group()
@click.version_option(version=__version__)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads")
@click.option("--seed", type=click.IntRange(min=0), default=0, help="Base RNG seed")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.pass_context
def main(ctx, out_dir, fmt, threads, seed, verbose):
    """Limiting spectral distributions of random commutators and anticommutators."""
    try:
        config = get_config()
    except ConfigError as e:
        console.print(f"[red]Error: {e}[/red]")
        ctx.exit(EXIT_USAGE)
    _setup_logging(verbose)
    ctx.obj = RunConfig(
        out_dir=str(out_dir or config.output_dir),
        fmt=fmt,
        threads=threads or config.threads,
        seed=seed,
        verbose=verbose,
    )


def _report_curve(run: RunConfig, curve):
    formatter = OutputFormatter(console)
    if run.fmt == "json":
        click.echo(formatter.to_json(formatter.curve_to_dict(curve)))
    else:
        formatter.print_table(formatter.build_curve_table(curve))


@main.command("lsd-identity")
@click.option("--c", "c", type=float, required=True, help="Aspect ratio p/n")
@click.option("--kernel", type=click.Choice(KERNEL_CHOICES), default="skew")
@click.option("--points", type=int, default=401, help="Grid points")
@click.option("--x-max", type=float, default=None, help="Grid half-width (default 1.25·U)")
@click.pass_obj
@handle_errors
def lsd_identity(run: RunConfig, c: float, kernel: str, points: int, x_max: float | None):
    """Closed-form LSD for identity covariance."""
    curve = closed_form_curve(c, GridSpec(points, x_max), KernelTag.parse(kernel))
    writer = run.writer()
    writer.write_curve(curve)
    _report_curve(run, curve)
    _finish(
        run,
        writer,
        "lsd-identity",
        {"c": c, "kernel": kernel, "points": points, "x_max": x_max},
    )


@main.command("lsd-general")
@click.option("--c", "c", type=float, required=True, help="Aspect ratio p/n")
@click.option("--h-file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--kernel", type=click.Choice(KERNEL_CHOICES), default="skew")
@click.option("--points", type=int, default=401, help="Grid points")
@click.option("--x-max", type=float, default=None, help="Grid half-width (default: auto)")
@click.option("--tol", type=float, default=None, help="Solver residual tolerance")
@click.option("--max-iter", type=int, default=None, help="Solver iteration cap")
@click.option("--damping", type=float, default=None, help="Picard damping in (0, 1]")
@click.option("--no-newton", is_flag=True, help="Disable the Newton fallback")
@click.pass_obj
@handle_errors
def lsd_general(
    run: RunConfig,
    c: float,
    h_file: str,
    kernel: str,
    points: int,
    x_max: float | None,
    tol: float | None,
    max_iter: int | None,
    damping: float | None,
    no_newton: bool,
):
    """Numeric LSD for a covariance spectrum read from H-FILE."""
    H = read_spectral_measure(h_file)  # noqa: N806
    solver_options = {"tol": tol, "max_iter": max_iter, "damping": damping}
    overrides = {k: v for k, v in solver_options.items() if v is not None}
    cfg = FixedPointConfig.from_config(newton_fallback=not no_newton, **overrides)
    curve = lsd_curve(
        c,
        H,
        KernelTag.parse(kernel),
        GridSpec(points, x_max),
        cfg,
        InversionConfig.from_config(),
        threads=run.threads,
    )
    writer = run.writer()
    writer.write_curve(curve)
    _report_curve(run, curve)
    _finish(
        run,
        writer,
        "lsd-general",
        {
            "c": c,
            "h_file": str(Path(h_file).resolve()),
            "kernel": kernel,
            "points": points,
            "x_max": x_max,
            "tol": tol,
            "max_iter": max_iter,
            "damping": damping,
            "no_newton": no_newton,
        },
    )


@main.command()
@click.option("--p", "p", type=int, required=True, help="Matrix dimension")
@click.option("--n", "n", type=int, required=True, help="Sample size")
@click.option(
    "--entry-dist",
    type=click.Choice([d.value for d in EntryDistribution]),
    default="mixed",
)
@click.option("--sigma-file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--kernel", type=click.Choice(KERNEL_CHOICES), default="minus")
@click.option("--replicates", type=click.IntRange(min=1), default=1)
@click.pass_obj
@handle_errors
def simulate(
    run: RunConfig,
    p: int,
    n: int,
    entry_dist: str,
    sigma_file: str | None,
    kernel: str,
    replicates: int,
):
    """Simulate commutator (minus) or anticommutator (plus) spectra."""
    cfg = EnsembleConfig(
        p=p,
        n=n,
        entry_dist=EntryDistribution(entry_dist),
        sigma=read_spectral_measure(sigma_file) if sigma_file else None,
        seed=run.seed,
        kernel=KernelTag.parse(kernel),
    )
    samples = simulate_replicates(cfg, replicates, run.threads)
    writer = run.writer()
    for sample in samples:
        writer.write_sample(sample, f"sample_{sample.replicate:03d}")

    formatter = OutputFormatter(console)
    if run.fmt == "json":
        summary = [
            {"replicate": s.replicate, "p": s.p, "n": s.n, "c_n": s.c_n} for s in samples
        ]
        click.echo(formatter.to_json(summary))
    else:
        formatter.print_table(formatter.build_sample_table(samples))
    _finish(
        run,
        writer,
        "simulate",
        {
            "p": p,
            "n": n,
            "entry_dist": entry_dist,
            "sigma_file": str(Path(sigma_file).resolve()) if sigma_file else None,
            "kernel": kernel,
            "replicates": replicates,
        },
    )


@main.command("compare")
@click.argument("samples", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--curve", "curve_path", type=click.Path(exists=True), required=True)
@click.option("--bins", type=int, default=50, help="Histogram bins")
@click.option("--atom-window", type=float, default=None, help="Default 0.01·U")
@click.option("--fail-above", type=float, default=None, help="Exit 5 if any KS exceeds this")
@click.pass_obj
@handle_errors
def compare_cmd(
    run: RunConfig,
    samples: tuple[str, ...],
    curve_path: str,
    bins: int,
    atom_window: float | None,
    fail_above: float | None,
):
    """Compare simulated SAMPLES against an LSD curve."""
    curve = read_curve(curve_path)
    reports = [compare(read_sample(path), curve, bins, atom_window) for path in samples]
    summary = aggregate(reports)

    writer = run.writer()
    for i, report in enumerate(reports):
        writer.write_report(report, f"report_{i:03d}")
    writer.write_aggregate(reports, summary)

    formatter = OutputFormatter(console)
    if run.fmt == "json":
        click.echo(formatter.to_json({"reports": [r.to_dict() for r in reports], **summary}))
    else:
        formatter.print_table(formatter.build_report_table(reports))
    _finish(
        run,
        writer,
        "compare",
        {
            "samples": [str(Path(s).resolve()) for s in samples],
            "curve_path": str(Path(curve_path).resolve()),
            "bins": bins,
            "atom_window": atom_window,
            "fail_above": fail_above,
        },
    )

    if fail_above is not None and summary["ks_max"] > fail_above:
        console.print(f"[red]KS {summary['ks_max']:.4f} exceeds {fail_above}[/red]")
        click.get_current_context().exit(EXIT_THRESHOLD)


@main.command()
@click.option("--beta", type=float, default=1.0, help="Mass of H away from 0")
@click.option("--c", "c", type=float, default=None, help="Aspect ratio p/n")
@click.option("--sweep", is_flag=True, help="Tabulate over a grid of c")
@click.option("--c-min", type=float, default=0.1)
@click.option("--c-max", type=float, default=10.0)
@click.option("--steps", type=int, default=100)
@click.pass_obj
@handle_errors
def pointmass(
    run: RunConfig,
    beta: float,
    c: float | None,
    sweep: bool,
    c_min: float,
    c_max: float,
    steps: int,
):
    """Point mass at 0 of the LSD for H = (1 − β)δ₀ + βH₁."""
    if sweep:
        cs = np.linspace(c_min, c_max, steps).tolist()
    elif c is not None:
        cs = [c]
    else:
        raise click.UsageError("give --c or --sweep")
    rows = point_mass_sweep(beta, cs)

    writer = run.writer()
    if sweep:
        writer.write_point_mass_sweep(rows)
    formatter = OutputFormatter(console)
    if run.fmt == "json" or not sweep:
        payload = [{"c": c_, "point_mass": m, "h_limit": h} for c_, m, h in rows]
        click.echo(formatter.to_json(payload if sweep else payload[0]))
    else:
        formatter.print_table(formatter.build_point_mass_table(rows))
    _finish(
        run,
        writer,
        "pointmass",
        {
            "beta": beta,
            "c": c,
            "sweep": sweep,
            "c_min": c_min,
            "c_max": c_max,
            "steps": steps,
        },
    )


@main.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def replay(ctx, manifest: str):
    """Rerun the command recorded in MANIFEST into the current --out directory."""
    record = json.loads(Path(manifest).read_text())
    command = main.get_command(ctx, record.get("command", ""))
    if command is None or command is replay:
        raise click.UsageError(f"cannot replay command {record.get('command')!r}")
    recorded = record.get("global", {})
    ctx.obj = RunConfig(
        out_dir=ctx.obj.out_dir,
        fmt=recorded.get("fmt", ctx.obj.fmt),
        threads=recorded.get("threads", ctx.obj.threads),
        seed=recorded.get("seed", ctx.obj.seed),
        verbose=ctx.obj.verbose,
    )
    parameters = dict(record["parameters"])
    if record["command"] == "compare":
        parameters["samples"] = tuple(parameters["samples"])
    ctx.invoke(command, **parameters)


if __name__ == "__main__":
    main()
