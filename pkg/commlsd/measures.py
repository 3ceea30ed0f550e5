"""Spectral measures, Stieltjes transforms and their inversion."""

import logging
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import IntegrationWarning, cumulative_trapezoid, quad

from commlsd.config import get_config
from commlsd.errors import DomainError
from commlsd.models import EsdSample, HalfPlanePoint, KernelTag, LsdCurve

logger = logging.getLogger(__name__)

MASS_TOL = 1e-12
NEGATIVE_MASS_TOL = 1e-8


@dataclass(frozen=True)
class SpectralMeasure:
    """A covariance spectrum H = zero_mass·δ₀ + Σ weights·δ_locations.

    Atoms placed exactly at 0 are folded into ``zero_mass``. The point mass
    at zero (H = δ₀) is representable and reported through ``is_degenerate``.
    """

    locations: tuple[float, ...]
    weights: tuple[float, ...]
    zero_mass: float = 0.0

    def __post_init__(self):
        """Validate atoms and fold zero atoms into ``zero_mass``."""
        locations = tuple(float(x) for x in self.locations)
        weights = tuple(float(w) for w in self.weights)
        if len(locations) != len(weights):
            raise DomainError("locations and weights must have equal length")
        if any(x < 0 or not math.isfinite(x) for x in locations):
            raise DomainError("atom locations must be finite and nonnegative")
        if any(w <= 0 for w in weights):
            raise DomainError("atom weights must be positive")
        if not 0.0 <= self.zero_mass <= 1.0:
            raise DomainError("zero_mass must lie in [0, 1]")

        zero_mass = float(self.zero_mass) + sum(w for x, w in zip(locations, weights) if x == 0)
        kept = [(x, w) for x, w in zip(locations, weights) if x > 0]
        total = zero_mass + sum(w for _, w in kept)
        if abs(total - 1.0) > MASS_TOL:
            raise DomainError(f"total mass is {total!r}, expected 1")

        object.__setattr__(self, "locations", tuple(x for x, _ in kept))
        object.__setattr__(self, "weights", tuple(w for _, w in kept))
        object.__setattr__(self, "zero_mass", zero_mass)

    @classmethod
    def identity(cls) -> "SpectralMeasure":
        """H = δ₁, the spectrum of Σ = I."""
        return cls((1.0,), (1.0,))

    @classmethod
    def from_quantiles(
        cls, ppf: Callable[[np.ndarray], np.ndarray], atoms: int, zero_mass: float = 0.0
    ) -> "SpectralMeasure":
        """Discretize an absolutely continuous H₁ at its midpoint quantiles.

        Args:
            ppf: Quantile function of H₁ (e.g. ``scipy.stats.gamma(2).ppf``)
            atoms: Number of equally weighted atoms
            zero_mass: Mass 1 − β placed at zero

        Returns:
            (1 − β)·δ₀ + β·(1/atoms)·Σ δ_{ppf((j − ½)/atoms)}
        """
        if atoms < 1:
            raise DomainError("need at least one atom")
        u = (np.arange(atoms) + 0.5) / atoms
        locations = np.asarray(ppf(u), dtype=float)
        weight = (1.0 - zero_mass) / atoms
        return cls(tuple(locations), (weight,) * atoms, zero_mass)

    @property
    def beta(self) -> float:
        """Mass of the strictly positive part."""
        return 1.0 - self.zero_mass

    @property
    def is_degenerate(self) -> bool:
        """True when H = δ₀."""
        return self.beta <= MASS_TOL

    @property
    def lambda_max(self) -> float:
        return max(self.locations, default=0.0)

    def positive_part(self) -> "SpectralMeasure":
        """H₁, the normalized restriction of H to (0, ∞)."""
        if self.is_degenerate:
            raise DomainError("δ₀ has no positive part")
        return SpectralMeasure(self.locations, tuple(w / self.beta for w in self.weights))

    def mean(self) -> float:
        """∫ λ dH(λ)."""
        return float(np.dot(self.locations, self.weights)) if self.locations else 0.0

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Positive locations and their weights as float arrays."""
        return np.asarray(self.locations, dtype=float), np.asarray(self.weights, dtype=float)


def read_spectral_measure(path: Path | str) -> SpectralMeasure:
    """Parse the ``location weight`` text format with optional ``zero_mass <v>`` header."""
    locations: list[float] = []
    weights: list[float] = []
    zero_mass = 0.0
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if fields[0] == "zero_mass":
                if len(fields) != 2 or locations:
                    raise ValueError("zero_mass must be a single value before the atoms")
                zero_mass = float(fields[1])
            elif len(fields) == 2:
                locations.append(float(fields[0]))
                weights.append(float(fields[1]))
            else:
                raise ValueError("expected 'location weight'")
        except ValueError as e:
            raise DomainError(f"{path}:{lineno}: {e}") from e
    return SpectralMeasure(tuple(locations), tuple(weights), zero_mass)


def write_spectral_measure(measure: SpectralMeasure, path: Path | str) -> None:
    """Write ``measure`` in the text format read by :func:`read_spectral_measure`."""
    lines = [f"zero_mass {measure.zero_mass!r}"]
    lines += [f"{x!r} {w!r}" for x, w in zip(measure.locations, measure.weights)]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many atoms on the spectral axis of ``kernel``.

    For the skew kernel a coordinate t stands for the point i·t.
    """

    coords: tuple[float, ...]
    weights: tuple[float, ...]
    kernel: KernelTag = KernelTag.SKEW

    def __post_init__(self):
        if len(self.coords) != len(self.weights) or not self.coords:
            raise DomainError("a discrete measure needs matching, nonempty coords and weights")
        if abs(sum(self.weights) - 1.0) > MASS_TOL or min(self.weights) <= 0:
            raise DomainError("weights must be positive and sum to 1")

    @classmethod
    def from_sample(cls, sample: EsdSample) -> "DiscreteMeasure":
        """ESD of a simulated spectrum."""
        p = len(sample.coords)
        return cls(tuple(sample.coords), (1.0 / p,) * p, sample.kernel)


def stieltjes_eval(measure: DiscreteMeasure, z: HalfPlanePoint | complex) -> complex:
    """Stieltjes transform of a discrete measure on its axis.

    Skew: Σ w/(i·t − z), defined off the imaginary axis.
    Hermitian: Σ w/(t − z), defined off the real axis.
    """
    z = z.value if isinstance(z, HalfPlanePoint) else complex(z)
    if measure.kernel is KernelTag.SKEW and z.real == 0:
        raise DomainError(f"{z} lies on the imaginary axis")
    if measure.kernel is KernelTag.HERMITIAN and z.imag == 0:
        raise DomainError(f"{z} lies on the real axis")
    t = np.asarray(measure.coords, dtype=float) * measure.kernel.axis
    return complex(np.sum(np.asarray(measure.weights) / (t - z)))


@dataclass(frozen=True)
class InversionConfig:
    """Epsilon schedule and extrapolation settings for boundary limits."""

    eps_schedule: tuple[float, ...] = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
    order: int = 1
    tol: float = 1e-4

    def __post_init__(self):
        eps = self.eps_schedule
        if len(eps) < 2 or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise DomainError("eps_schedule needs at least two strictly decreasing positives")
        if not 1 <= self.order < len(eps):
            raise DomainError("order must be between 1 and len(eps_schedule) - 1")

    @classmethod
    def from_config(cls, config=None, **overrides) -> "InversionConfig":
        """Build from the global :class:`~commlsd.config.Config` defaults."""
        config = config or get_config()
        values = {"eps_schedule": tuple(config.eps_schedule), "order": config.richardson_order}
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class InversionResult:
    """An extrapolated boundary limit with its error estimate."""

    value: float
    error: float
    converged: bool
    samples: tuple[float, ...] = field(default=(), compare=False)


def _fit_at_zero(eps: np.ndarray, values: np.ndarray, order: int) -> float:
    coef = np.polynomial.polynomial.polyfit(eps, values, order)
    return float(coef[0])


def richardson_extrapolate(
    eps: Sequence[float], values: Sequence[float], order: int = 1
) -> tuple[float, float]:
    """Extrapolate ``values(eps)`` to eps = 0 with a degree-``order`` polynomial.

    The estimate uses the ``order + 1`` smallest epsilons. The error estimate
    is the change from the same fit one step earlier in the schedule, or the
    distance to the last raw value when the schedule is too short for that.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    k = order + 1
    if len(eps) < k:
        raise DomainError(f"order {order} needs at least {k} samples")
    estimate = _fit_at_zero(eps[-k:], values[-k:], order)
    if len(eps) > k:
        previous = _fit_at_zero(eps[-k - 1 : -1], values[-k - 1 : -1], order)
    else:
        previous = float(values[-1])
    return estimate, abs(estimate - previous)


def _boundary_point(x: float, eps: float, kernel: KernelTag) -> complex:
    return complex(-eps, x) if kernel is KernelTag.SKEW else complex(x, eps)


def _boundary_part(value: complex, kernel: KernelTag) -> float:
    return value.real if kernel is KernelTag.SKEW else value.imag


def _config(config: InversionConfig | None) -> InversionConfig:
    return config if config is not None else InversionConfig.from_config()


def invert_density(
    s_fn: Callable[[complex], complex],
    x: float,
    config: InversionConfig | None = None,
    *,
    kernel: KernelTag = KernelTag.SKEW,
) -> InversionResult:
    """Density at ``x`` from the boundary values of ``s_fn``.

    Skew: (1/π)·lim Re s(−ε + ix). Hermitian: (1/π)·lim Im s(x + iε).
    """
    config = _config(config)
    samples = [
        _boundary_part(s_fn(_boundary_point(x, eps, kernel)), kernel) / math.pi
        for eps in config.eps_schedule
    ]
    value, error = richardson_extrapolate(config.eps_schedule, samples, config.order)
    converged = error <= config.tol
    if not converged:
        logger.debug("density at x=%g not converged (error %.3g)", x, error)
    return InversionResult(value, error, converged, tuple(samples))


def invert_point_mass(
    s_fn: Callable[[complex], complex],
    x: float,
    config: InversionConfig | None = None,
    *,
    kernel: KernelTag = KernelTag.SKEW,
) -> InversionResult:
    """Atom at ``x``: lim ε·Re s(−ε + ix) (skew) or lim ε·Im s(x + iε) (hermitian)."""
    config = _config(config)
    samples = [
        eps * _boundary_part(s_fn(_boundary_point(x, eps, kernel)), kernel)
        for eps in config.eps_schedule
    ]
    value, error = richardson_extrapolate(config.eps_schedule, samples, config.order)
    negative = value < -(NEGATIVE_MASS_TOL + error)
    converged = error <= config.tol and not negative
    if negative:
        logger.warning("negative point mass %.3g at x=%g", value, x)
    return InversionResult(value, error, converged, tuple(samples))


def cdf_interval(
    s_fn: Callable[[complex], complex],
    a: float,
    b: float,
    config: InversionConfig | None = None,
    *,
    kernel: KernelTag = KernelTag.SKEW,
    limit: int = 200,
) -> InversionResult:
    """Mass of [a, b]: (1/π)·lim ∫ₐᵇ of the boundary part of s, by adaptive quadrature."""
    if a > b:
        raise DomainError(f"empty interval [{a}, {b}]")
    if a == b:
        return InversionResult(0.0, 0.0, True)
    config = _config(config)

    quadrature_ok = True
    samples = []
    for eps in config.eps_schedule:

        def integrand(x: float, eps: float = eps) -> float:
            return _boundary_part(s_fn(_boundary_point(x, eps, kernel)), kernel)

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", IntegrationWarning)
            integral, _ = quad(integrand, a, b, limit=limit)
        for w in caught:
            if issubclass(w.category, IntegrationWarning):
                logger.debug("quadrature on [%g, %g] at eps=%g: %s", a, b, eps, w.message)
                quadrature_ok = False
        samples.append(integral / math.pi)

    value, error = richardson_extrapolate(config.eps_schedule, samples, config.order)
    value = min(max(value, 0.0), 1.0)
    return InversionResult(value, error, quadrature_ok and error <= config.tol, tuple(samples))


class StepCdf:
    """Right-continuous step CDF given by its jump locations."""

    def __init__(self, jumps: Sequence[float], cumulative: Sequence[float]):
        self.jumps = np.asarray(jumps, dtype=float)
        self.cumulative = np.asarray(cumulative, dtype=float)
        if self.jumps.shape != self.cumulative.shape or self.jumps.size == 0:
            raise DomainError("jumps and cumulative values must be nonempty and equal length")
        if np.any(np.diff(self.jumps) <= 0):
            raise DomainError("jump locations must be strictly increasing")
        if np.any(np.diff(self.cumulative) < 0) or self.cumulative[0] < 0:
            raise DomainError("cumulative values must be nondecreasing and nonnegative")
        if abs(self.cumulative[-1] - 1.0) > MASS_TOL:
            raise DomainError("final cumulative value must be 1")

    @classmethod
    def from_samples(cls, coords: Sequence[float]) -> "StepCdf":
        """Empirical CDF; repeated values merge into one jump."""
        coords = np.sort(np.asarray(coords, dtype=float))
        if coords.size == 0:
            raise DomainError("no samples")
        jumps, counts = np.unique(coords, return_counts=True)
        return cls(jumps, np.cumsum(counts) / coords.size)

    @property
    def breakpoints(self) -> np.ndarray:
        return self.jumps

    def value(self, x):
        """F(x)."""
        idx = np.searchsorted(self.jumps, x, side="right")
        return np.where(idx > 0, self.cumulative[np.maximum(idx - 1, 0)], 0.0)

    def left(self, x):
        """F(x−)."""
        idx = np.searchsorted(self.jumps, x, side="left")
        return np.where(idx > 0, self.cumulative[np.maximum(idx - 1, 0)], 0.0)

    def step_at(self, x: float) -> float:
        """Size of the jump at ``x``."""
        return float(self.value(x) - self.left(x))


class CurveCdf:
    """CDF of an LSD: piecewise-linear continuous part plus an atom at 0."""

    def __init__(self, grid: np.ndarray, continuous: np.ndarray, atom: float = 0.0):
        self.grid = np.asarray(grid, dtype=float)
        self.continuous = np.asarray(continuous, dtype=float)
        self.atom = float(atom)

    @classmethod
    def from_curve(cls, curve: LsdCurve) -> "CurveCdf":
        """Cumulative trapezoid of the density, rescaled to total 1 − point mass."""
        continuous = cumulative_trapezoid(curve.density, curve.grid, initial=0.0)
        total = continuous[-1]
        if total > 0:
            continuous *= (1.0 - curve.point_mass_zero) / total
        return cls(curve.grid, continuous, curve.point_mass_zero)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.union1d(self.grid, [0.0])

    def continuous_part(self, x):
        """Continuous part of G at x, without the atom."""
        return np.interp(x, self.grid, self.continuous, left=0.0, right=self.continuous[-1])

    def value(self, x):
        """G(x)."""
        return self.continuous_part(x) + self.atom * (np.asarray(x) >= 0)

    def left(self, x):
        """G(x−)."""
        return self.continuous_part(x) + self.atom * (np.asarray(x) > 0)

    def quantile(self, u):
        """Generalized inverse inf{x : G(x) ≥ u}."""
        u = np.asarray(u, dtype=float)
        below = float(self.continuous_part(0.0))
        shifted = np.where(u > below + self.atom, u - self.atom, np.minimum(u, below))
        x = np.interp(shifted, self.continuous, self.grid)
        in_atom = (u > below) & (u <= below + self.atom)
        return np.where(in_atom, 0.0, x)


def ks_and_levy(
    F: StepCdf | CurveCdf, G: StepCdf | CurveCdf, *, tol: float = 1e-12
) -> tuple[float, float]:
    """Uniform (Kolmogorov) and Lévy distances between two CDFs.

    Both CDFs are piecewise linear between their breakpoints, so each
    supremum is attained at a breakpoint or as a one-sided limit there.
    The Lévy distance is found by bisection on [0, ks].
    """
    points = np.union1d(F.breakpoints, G.breakpoints)
    ks = max(
        float(np.max(np.abs(F.value(points) - G.value(points)))),
        float(np.max(np.abs(F.left(points) - G.left(points)))),
    )
    ks = min(ks, 1.0)
    if ks == 0.0:
        return 0.0, 0.0

    f_pts = F.breakpoints
    g_pts = G.breakpoints
    slack = 1e-14

    def within(eps: float) -> bool:
        # G(x) >= F(x - eps) - eps, smallest at the right limit of each piece
        if np.any(G.value(f_pts + eps) < F.value(f_pts) - eps - slack):
            return False
        if np.any(G.left(f_pts + eps) < F.left(f_pts) - eps - slack):
            return False
        if np.any(G.value(g_pts) < F.value(g_pts - eps) - eps - slack):
            return False
        if np.any(G.left(g_pts) < F.left(g_pts - eps) - eps - slack):
            return False
        # G(x) <= F(x + eps) + eps, largest at a breakpoint or just before it
        if np.any(G.value(f_pts - eps) > F.value(f_pts) + eps + slack):
            return False
        if np.any(G.left(f_pts - eps) > F.left(f_pts) + eps + slack):
            return False
        if np.any(G.value(g_pts) > F.value(g_pts + eps) + eps + slack):
            return False
        return not np.any(G.left(g_pts) > F.left(g_pts + eps) + eps + slack)

    lo, hi = 0.0, ks
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if within(mid):
            hi = mid
        else:
            lo = mid
    return ks, hi
