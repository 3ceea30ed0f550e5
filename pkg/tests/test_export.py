"""Tests for artifact files."""

import json
import math

import numpy as np
import pytest

from commlsd import __version__
from commlsd.errors import DomainError
from commlsd.export import ArtifactWriter, read_curve, read_sample
from commlsd.identity_lsd import closed_form_curve
from commlsd.models import ComparisonReport, EntryDistribution, GridSpec
from commlsd.simulate import EnsembleConfig, simulate


@pytest.fixture
def curve():
    """Closed-form curve with an atom."""
    return closed_form_curve(4.0, GridSpec(41))


@pytest.fixture
def sample():
    """Small mixed-entry replicate."""
    cfg = EnsembleConfig(p=8, n=4, entry_dist=EntryDistribution.MIXED, seed=5)
    return simulate(cfg, replicate=2)


def report(ks):
    return ComparisonReport(
        ks=ks, levy=ks / 2, l1_hist=0.2, point_mass_est=0.5,
        support_violation_frac=0.0, p=8, n=4,
    )


class TestArtifactWriter:
    """Tests for ArtifactWriter."""

    def test_unknown_format(self, tmp_path):
        """Only csv and json are accepted."""
        with pytest.raises(DomainError):
            ArtifactWriter(tmp_path, "xml")

    def test_creates_directory(self, tmp_path):
        """Nested output directories are created."""
        writer = ArtifactWriter(tmp_path / "a" / "b")
        assert writer.out_dir.is_dir()

    def test_curve_csv(self, tmp_path, curve):
        """CSV curve has a header, a sidecar, and reads back."""
        writer = ArtifactWriter(tmp_path)
        path = writer.write_curve(curve)

        assert path.name == "curve.csv"
        assert path.read_text().splitlines()[0] == "x,density,cdf"
        meta = json.loads((tmp_path / "curve.meta.json").read_text())
        assert meta["c"] == 4.0
        assert meta["kernel"] == "skew"
        assert meta["point_mass_zero"] == pytest.approx(0.5)

        loaded = read_curve(path)
        np.testing.assert_array_equal(loaded.grid, curve.grid)
        np.testing.assert_array_equal(loaded.density, curve.density)
        assert loaded.support == curve.support
        assert writer.artifacts == ["curve.meta.json", "curve.csv"]

    def test_curve_cdf_column(self, tmp_path, curve):
        """The cdf column ends at 1 and jumps by the atom at 0."""
        path = ArtifactWriter(tmp_path).write_curve(curve)
        table = np.loadtxt(path, delimiter=",", skiprows=1)
        assert table[-1, 2] == pytest.approx(1.0)
        middle = curve.grid.size // 2
        assert table[middle, 2] - table[middle - 1, 2] >= 0.5

    def test_curve_json(self, tmp_path, curve):
        """JSON format writes one self-describing file."""
        path = ArtifactWriter(tmp_path, "json").write_curve(curve, stem="lsd")
        assert path.name == "lsd.json"
        assert not (tmp_path / "lsd.meta.json").exists()
        loaded = read_curve(path)
        assert loaded.point_mass_zero == curve.point_mass_zero
        assert loaded.method == "closed_form"

    def test_sample_csv(self, tmp_path, sample):
        """Sample CSV keeps provenance in the sidecar."""
        path = ArtifactWriter(tmp_path).write_sample(sample, stem="sample_002")
        meta = json.loads((tmp_path / "sample_002.meta.json").read_text())
        assert meta["p"] == 8
        assert meta["c_n"] == 2.0
        assert meta["entry_dist"] == "mixed"
        assert meta["replicate"] == 2
        assert meta["row_permutation"] == sample.row_permutation
        assert meta["fingerprint"] == sample.fingerprint

        loaded = read_sample(path)
        np.testing.assert_array_equal(loaded.coords, sample.coords)
        assert loaded.seed == 5

    def test_sample_json(self, tmp_path, sample):
        """JSON samples carry their coordinates inline."""
        path = ArtifactWriter(tmp_path, "json").write_sample(sample)
        assert len(json.loads(path.read_text())["coords"]) == 8
        assert read_sample(path).entry_dist is EntryDistribution.MIXED

    def test_missing_sidecar(self, tmp_path, sample):
        """A CSV without its sidecar cannot be read."""
        path = ArtifactWriter(tmp_path).write_sample(sample)
        (tmp_path / "sample.meta.json").unlink()
        with pytest.raises(DomainError, match="sidecar"):
            read_sample(path)

    def test_malformed_curve(self, tmp_path):
        """Garbage content raises DomainError."""
        path = tmp_path / "bad.json"
        path.write_text("{}")
        with pytest.raises(DomainError):
            read_curve(path)

    def test_aggregate(self, tmp_path):
        """Per-replicate rows plus a summary file."""
        writer = ArtifactWriter(tmp_path)
        path = writer.write_aggregate([report(0.1), report(0.2)], {"replicates": 2})
        lines = path.read_text().splitlines()
        assert lines[0] == "replicate,ks,levy,l1,point_mass_est,support_violation_frac"
        assert len(lines) == 3
        assert lines[2].startswith("1,0.2")
        assert json.loads((tmp_path / "aggregate.summary.json").read_text()) == {"replicates": 2}

    def test_report(self, tmp_path):
        """Reports are plain JSON."""
        path = ArtifactWriter(tmp_path).write_report(report(0.1), stem="report_000")
        assert json.loads(path.read_text())["ks"] == 0.1

    def test_point_mass_inf(self, tmp_path):
        """An infinite limit is written as inf."""
        rows = [(0.5, 0.0, 2.0), (1.0, 0.0, math.inf), (4.0, 0.5, 0.75)]
        path = ArtifactWriter(tmp_path).write_point_mass_sweep(rows)
        lines = path.read_text().splitlines()
        assert lines[0] == "c,point_mass,h_limit"
        assert lines[2].endswith("inf")

    def test_manifest(self, tmp_path, curve):
        """The manifest lists parameters, versions and earlier artifacts."""
        writer = ArtifactWriter(tmp_path)
        writer.write_curve(curve)
        path = writer.write_manifest("lsd-identity", {"c": 4.0}, {"seed": 0})
        manifest = json.loads(path.read_text())
        assert manifest["command"] == "lsd-identity"
        assert manifest["parameters"] == {"c": 4.0}
        assert manifest["global"] == {"seed": 0}
        assert manifest["versions"]["commlsd"] == __version__
        assert "curve.csv" in manifest["artifacts"]

    def test_no_temporary_files_left(self, tmp_path, curve, sample):
        """Atomic writes leave only the final files behind."""
        writer = ArtifactWriter(tmp_path)
        writer.write_curve(curve)
        writer.write_sample(sample)
        assert not list(tmp_path.glob("*.tmp"))
        assert not list(tmp_path.glob(".*"))

    def test_overwrite(self, tmp_path):
        """Writing the same name twice replaces the content once."""
        writer = ArtifactWriter(tmp_path)
        writer.write_text("a.txt", "one")
        writer.write_text("a.txt", "two")
        assert (tmp_path / "a.txt").read_text() == "two"
        assert writer.artifacts == ["a.txt"]
