"""Artifact files: curves, samples, reports and run manifests."""

import io
import json
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import scipy

from commlsd import __version__
from commlsd.errors import DomainError
from commlsd.models import ComparisonReport, EntryDistribution, EsdSample, KernelTag, LsdCurve
from commlsd.stats import curve_cdf

FORMATS = ("csv", "json")
FLOAT_FORMAT = "%.17g"


def versions() -> dict[str, str]:
    return {"commlsd": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _curve_meta(curve: LsdCurve) -> dict:
    return {
        "c": curve.c,
        "kernel": curve.kernel.value,
        "point_mass_zero": curve.point_mass_zero,
        "support": list(curve.support),
        "method": curve.method,
        "solver": curve.metadata.get("solver"),
        "metadata": {k: v for k, v in curve.metadata.items() if k != "solver"},
    }


def _sample_meta(sample: EsdSample) -> dict:
    return {
        "p": sample.p,
        "n": sample.n,
        "c_n": sample.c_n,
        "entry_dist": sample.entry_dist.value if sample.entry_dist else None,
        "kernel": sample.kernel.value,
        "seed": sample.seed,
        "replicate": sample.replicate,
        "row_permutation": sample.row_permutation,
        "fingerprint": sample.fingerprint,
    }


def _table_csv(header: str, columns: Sequence[np.ndarray], fmt=FLOAT_FORMAT) -> str:
    buffer = io.StringIO()
    np.savetxt(buffer, np.column_stack(columns), delimiter=",", header=header, comments="", fmt=fmt)
    return buffer.getvalue()


class ArtifactWriter:
    """Write run artifacts into one output directory.

    Every file is written to a temporary file in the same directory and
    moved into place with ``os.replace``.
    """

    def __init__(self, out_dir: Path | str, fmt: str = "csv"):
        """Create the output directory if needed."""
        if fmt not in FORMATS:
            raise DomainError(f"unknown format {fmt!r}")
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt
        self.artifacts: list[str] = []

    def write_text(self, name: str, text: str) -> Path:
        """Atomically write ``text`` to ``out_dir/name``."""
        target = self.out_dir / name
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        if name not in self.artifacts:
            self.artifacts.append(name)
        return target

    def write_json(self, name: str, payload) -> Path:
        return self.write_text(name, json.dumps(payload, indent=2) + "\n")

    def write_curve(self, curve: LsdCurve, stem: str = "curve") -> Path:
        """Curve as CSV ``x,density,cdf`` plus a ``.meta.json`` sidecar, or one JSON file."""
        cdf = curve_cdf(curve).value(curve.grid)
        if self.fmt == "json":
            payload = _curve_meta(curve)
            payload.update(
                {"x": curve.grid.tolist(), "density": curve.density.tolist(), "cdf": cdf.tolist()}
            )
            return self.write_json(f"{stem}.json", payload)
        self.write_json(f"{stem}.meta.json", _curve_meta(curve))
        return self.write_text(
            f"{stem}.csv", _table_csv("x,density,cdf", [curve.grid, curve.density, cdf])
        )

    def write_sample(self, sample: EsdSample, stem: str = "sample") -> Path:
        """Sample as CSV ``index,coord`` plus a ``.meta.json`` sidecar, or one JSON file."""
        if self.fmt == "json":
            payload = _sample_meta(sample)
            payload["coords"] = sample.coords.tolist()
            return self.write_json(f"{stem}.json", payload)
        self.write_json(f"{stem}.meta.json", _sample_meta(sample))
        index = np.arange(sample.p)
        text = _table_csv("index,coord", [index, sample.coords], fmt=["%d", FLOAT_FORMAT])
        return self.write_text(f"{stem}.csv", text)

    def write_report(self, report: ComparisonReport, stem: str = "report") -> Path:
        return self.write_json(f"{stem}.json", report.to_dict())

    def write_aggregate(
        self, reports: Sequence[ComparisonReport], summary: dict, stem: str = "aggregate"
    ) -> Path:
        """Per-replicate CSV ``replicate,ks,levy,l1,point_mass_est,support_violation_frac``."""
        self.write_json(f"{stem}.summary.json", summary)
        rows = np.array(
            [
                [i, r.ks, r.levy, r.l1_hist, r.point_mass_est, r.support_violation_frac]
                for i, r in enumerate(reports)
            ]
        )
        header = "replicate,ks,levy,l1,point_mass_est,support_violation_frac"
        fmt = ["%d"] + [FLOAT_FORMAT] * 5
        return self.write_text(f"{stem}.csv", _table_csv(header, rows.T, fmt=fmt))

    def write_point_mass_sweep(self, rows: Sequence[tuple[float, float, float]]) -> Path:
        """CSV ``c,point_mass,h_limit``; an infinite limit is written as ``inf``."""
        table = np.array(rows, dtype=float)
        return self.write_text("pointmass.csv", _table_csv("c,point_mass,h_limit", table.T))

    def write_manifest(self, command: str, parameters: dict, global_options: dict) -> Path:
        """Record everything needed to replay the run."""
        return self.write_json(
            "manifest.json",
            {
                "command": command,
                "parameters": parameters,
                "global": global_options,
                "versions": versions(),
                "artifacts": list(self.artifacts),
            },
        )


def _load_table(path: Path) -> tuple[dict, np.ndarray | None]:
    if path.suffix == ".json":
        return json.loads(path.read_text()), None
    sidecar = path.with_name(path.stem + ".meta.json")
    if not sidecar.exists():
        raise DomainError(f"missing sidecar {sidecar}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return json.loads(sidecar.read_text()), table


def read_curve(path: Path | str) -> LsdCurve:
    """Load a curve written by :meth:`ArtifactWriter.write_curve`."""
    path = Path(path)
    try:
        meta, table = _load_table(path)
        x = np.asarray(meta["x"]) if table is None else table[:, 0]
        f = np.asarray(meta["density"]) if table is None else table[:, 1]
        return LsdCurve(
            c=meta["c"],
            grid=x,
            density=f,
            point_mass_zero=meta["point_mass_zero"],
            support=tuple(meta["support"]),
            kernel=KernelTag(meta["kernel"]),
            method=meta.get("method", "numeric"),
            metadata=meta.get("metadata", {}),
        )
    except (KeyError, ValueError, OSError) as e:
        raise DomainError(f"cannot read curve {path}: {e}") from e


def read_sample(path: Path | str) -> EsdSample:
    """Load a sample written by :meth:`ArtifactWriter.write_sample`."""
    path = Path(path)
    try:
        meta, table = _load_table(path)
        coords = np.asarray(meta["coords"]) if table is None else table[:, 1]
        return EsdSample(
            coords=coords,
            p=meta["p"],
            n=meta["n"],
            kernel=KernelTag(meta["kernel"]),
            entry_dist=EntryDistribution(meta["entry_dist"]) if meta.get("entry_dist") else None,
            seed=meta.get("seed"),
            replicate=meta.get("replicate", 0),
            row_permutation=meta.get("row_permutation"),
            fingerprint=meta.get("fingerprint", ""),
        )
    except (KeyError, ValueError, OSError) as e:
        raise DomainError(f"cannot read sample {path}: {e}") from e
