"""Distances between simulated spectra and limiting distributions."""

import logging
from collections.abc import Sequence

import numpy as np

from commlsd.errors import DomainError
from commlsd.measures import CurveCdf, ks_and_levy
from commlsd.models import ComparisonReport, EsdSample, LsdCurve
from commlsd.simulate import esd_cdf

logger = logging.getLogger(__name__)

MIN_BINS = 10
ATOM_WINDOW_FRACTION = 1e-2


def curve_cdf(curve: LsdCurve) -> CurveCdf:
    """CDF of a tabulated LSD, atom at 0 included as a jump."""
    return CurveCdf.from_curve(curve)


def default_atom_window(curve: LsdCurve) -> float:
    return ATOM_WINDOW_FRACTION * curve.support[1]


def histogram_l1(
    sample: EsdSample, curve: LsdCurve, bins: int = 50, atom_window: float | None = None
) -> float:
    """L1 distance between the sample histogram and the LSD density on [−U, U].

    Bins touching the ±atom_window strip are skipped when the LSD has an atom
    at 0. Sample mass outside [−U, U] is added to the total.
    """
    if bins < MIN_BINS:
        raise DomainError(f"need at least {MIN_BINS} bins, got {bins}")
    upper = curve.support[1]
    window = default_atom_window(curve) if atom_window is None else atom_window
    edges = np.linspace(-upper, upper, bins + 1)
    width = edges[1] - edges[0]

    counts, _ = np.histogram(sample.coords, edges)
    empirical = counts / (sample.p * width)
    cdf = curve_cdf(curve)
    # exact bin averages of the tabulated continuous density
    theoretical = np.diff(cdf.continuous_part(edges)) / width

    keep = np.ones(bins, dtype=bool)
    if curve.point_mass_zero > 0:
        keep = (edges[1:] < -window) | (edges[:-1] > window)
    outside = np.mean(np.abs(sample.coords) > upper)
    return float(np.sum(np.abs(empirical - theoretical)[keep]) * width + outside)


def compare(
    sample: EsdSample, curve: LsdCurve, bins: int = 50, atom_window: float | None = None
) -> ComparisonReport:
    """KS and Lévy distances, histogram L1, atom and support diagnostics.

    Raises:
        DomainError: The sample and curve belong to different kernels
    """
    if sample.kernel is not curve.kernel:
        raise DomainError(
            f"kernel mismatch: sample is {sample.kernel.value}, curve is {curve.kernel.value}"
        )
    window = default_atom_window(curve) if atom_window is None else atom_window
    if window <= 0:
        raise DomainError("atom_window must be positive")

    ks, levy = ks_and_levy(esd_cdf(sample), curve_cdf(curve))
    magnitudes = np.abs(sample.coords)
    return ComparisonReport(
        ks=ks,
        levy=levy,
        l1_hist=histogram_l1(sample, curve, bins, window),
        point_mass_est=float(np.mean(magnitudes <= window)),
        support_violation_frac=float(np.mean(magnitudes > curve.support[1] + window)),
        p=sample.p,
        n=sample.n,
        atom_window=window,
    )


def aggregate(reports: Sequence[ComparisonReport]) -> dict:
    """Summary statistics over replicate reports."""
    if not reports:
        raise DomainError("nothing to aggregate")
    ks = np.array([r.ks for r in reports])
    return {
        "replicates": len(reports),
        "ks_median": float(np.median(ks)),
        "ks_max": float(ks.max()),
        "levy_max": max(r.levy for r in reports),
        "l1_mean": float(np.mean([r.l1_hist for r in reports])),
        "point_mass_mean": float(np.mean([r.point_mass_est for r in reports])),
        "support_violation_max": max(r.support_violation_frac for r in reports),
    }
