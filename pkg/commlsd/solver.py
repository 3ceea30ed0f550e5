"""Fixed-point solver for the general-covariance LSD.

For the commutator (skew kernel) h(z), z in the open left half-plane, is the
unique solution with Re h > 0 of

    h = ∫ λ dH(λ) / (−z + λ·ρ(c·h)),

and for the anticommutator (hermitian kernel) the unique solution with
Im h > 0 of the same equation with σ in place of ρ, z in the upper
half-plane. The Stieltjes transform s(z) of the LSD is recovered from h.
"""

import logging
import math
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from commlsd.config import get_config
from commlsd.errors import (
    DegenerateSpectrum,
    DomainError,
    GridSolveError,
    NoConvergence,
    RootSelectionAmbiguity,
)
from commlsd.kernels import kernel as kernel_fn
from commlsd.kernels import kernel_derivative, kernel_modulus
from commlsd.measures import (
    InversionConfig,
    SpectralMeasure,
    invert_density,
    invert_point_mass,
)
from commlsd.models import (
    GridSpec,
    HalfPlanePoint,
    KernelTag,
    LsdCurve,
    mirror,
    mirror_values,
    origin_cell_value,
)

logger = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 1e-8
POINT_MASS_MISMATCH = 1e-3
SINGULAR_ORIGIN_RTOL = 1e-9
MAX_BRACKET_EXPANSIONS = 20
CONTINUATION_REACH = 2.0
MIN_CONTINUATION_STEP = 1e-3


@dataclass(frozen=True)
class FixedPointConfig:
    """Settings for :func:`solve_h`."""

    tol: float = 1e-12
    max_iter: int = 2000
    damping: float = 0.5
    newton_fallback: bool = True
    initial_h: complex | None = None
    max_newton_iter: int = 100
    stall_window: int = 25

    def __post_init__(self):
        if not self.tol >= 1e-14:
            raise DomainError("tol must be at least 1e-14")
        if self.max_iter < 1:
            raise DomainError("max_iter must be positive")
        if not 0 < self.damping <= 1:
            raise DomainError("damping must lie in (0, 1]")

    @classmethod
    def from_config(cls, config=None, **overrides) -> "FixedPointConfig":
        """Build from the global :class:`~commlsd.config.Config` defaults."""
        config = config or get_config()
        values = {"tol": config.tol, "max_iter": config.max_iter, "damping": config.damping}
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class FixedPointSolution:
    """A converged h(z) with s(z) and contraction diagnostics."""

    z: HalfPlanePoint
    h: complex
    s: complex
    residual: float
    iterations: int
    gamma: float
    i1: float
    i2: float
    method: str = "picard"


class _FixedPointMap:
    """G(h) = Σ w·λ / (−z + λ·κ(c·h)) over the positive atoms of H."""

    def __init__(self, z: complex, c: float, H: SpectralMeasure, kernel: KernelTag):
        self.z = z
        self.c = c
        self.kernel = kernel
        self.lam, self.w = H.as_arrays()
        self._k = kernel_fn(kernel)
        self._k2 = kernel_modulus(kernel)
        self._dk = kernel_derivative(kernel)

    def denominators(self, h: complex) -> np.ndarray:
        return -self.z + self.lam * self._k(self.c * h)

    def __call__(self, h: complex) -> complex:
        return complex(np.sum(self.w * self.lam / self.denominators(h)))

    def derivative(self, h: complex) -> complex:
        d = self.denominators(h)
        return complex(-np.sum(self.w * self.lam**2 * self.c * self._dk(self.c * h) / d**2))

    def residual(self, h: complex) -> float:
        try:
            g = self(h)
        except DomainError:
            return math.inf
        r = abs(h - g) / max(1.0, abs(h))
        return r if math.isfinite(r) else math.inf

    def inside(self, h: complex) -> bool:
        """Whether c·h lies in the required open half-plane."""
        return h.real > 0 if self.kernel is KernelTag.SKEW else h.imag > 0

    def diagnostics(self, h: complex) -> tuple[float, float, float]:
        d2 = np.abs(self.denominators(h)) ** 2
        i1 = float(np.sum(self.w * self.lam / d2))
        i2 = float(np.sum(self.w * self.lam**2 / d2))
        gamma = self.c * self._k2(self.c * h) * i2
        return gamma, i1, i2


def _initial_h(g: _FixedPointMap) -> complex:
    # one undamped step from the interior point c·1 (skew) or c·i (hermitian)
    seed = g.c if g.kernel is KernelTag.SKEW else 1j * g.c
    d = -g.z + g.lam * g._k(seed)
    return complex(np.sum(g.w * g.lam / d))


def _picard(
    g: _FixedPointMap, h: complex, cfg: FixedPointConfig
) -> tuple[complex, float, int, bool]:
    """Damped Picard iteration; returns (h, residual, iterations, stalled)."""
    r = g.residual(h)
    window_start = r
    for it in range(1, cfg.max_iter + 1):
        if r <= cfg.tol:
            return h, r, it - 1, False
        target = g(h)
        alpha = cfg.damping
        for _ in range(40):
            candidate = h + alpha * (target - h)
            if g.inside(candidate) and math.isfinite(abs(candidate)):
                break
            alpha *= 0.5
        else:
            return h, r, it, True
        h = candidate
        r = g.residual(h)
        if it % cfg.stall_window == 0:
            if r > 0.5 * window_start:
                return h, r, it, True
            window_start = r
    return h, r, cfg.max_iter, r > cfg.tol


def _newton(g: _FixedPointMap, h: complex, cfg: FixedPointConfig) -> tuple[complex, float, int]:
    """Newton on F(h) = h − G(h) with backtracking inside the half-plane."""
    r = g.residual(h)
    it = 0
    for it in range(1, cfg.max_newton_iter + 1):
        if r <= cfg.tol:
            return h, r, it - 1
        fprime = 1.0 - g.derivative(h)
        if fprime == 0:
            break
        step = -(h - g(h)) / fprime
        t = 1.0
        for _ in range(40):
            candidate = h + t * step
            if g.inside(candidate):
                rc = g.residual(candidate)
                if rc < r:
                    h, r = candidate, rc
                    break
            t *= 0.5
        else:
            break
    return h, r, it


def _iterate(
    g: _FixedPointMap, h0: complex, cfg: FixedPointConfig
) -> tuple[complex, float, int, str]:
    """Picard from ``h0``, then Newton if Picard stalls.

    Returns (h, residual, iterations, method).
    """
    h, r, iterations, stalled = _picard(g, h0, cfg)
    method = "picard"
    if r > cfg.tol and stalled and cfg.newton_fallback:
        logger.debug("Picard stalled at z=%s (residual %.3g), switching to Newton", g.z, r)
        h, r, newton_iterations = _newton(g, h, cfg)
        iterations += newton_iterations
        method = "newton"
    return h, r, iterations, method


def _at_distance(z: complex, distance: float, kernel: KernelTag) -> complex:
    # same boundary coordinate as z, at the given distance from the boundary
    return complex(-distance, z.imag) if kernel is KernelTag.SKEW else complex(z.real, distance)


def _continue_inward(
    z: complex, c: float, H: SpectralMeasure, kernel: KernelTag, cfg: FixedPointConfig
) -> tuple[complex, float, int] | None:
    """Reach z from a point further from the boundary, warm-starting each solve.

    The distance to the boundary shrinks geometrically; a failed step is
    retried with a smaller ratio. Returns (h, residual, iterations), or None
    when the march cannot be completed.
    """
    target = -z.real if kernel is KernelTag.SKEW else z.imag
    log_target = math.log(target)
    position = math.log(max(CONTINUATION_REACH * target, 1.0))
    g = _FixedPointMap(_at_distance(z, math.exp(position), kernel), c, H, kernel)
    h, r, total, _ = _iterate(g, _initial_h(g), cfg)
    if r > cfg.tol:
        return None

    step = math.log(2.0)
    while position > log_target:
        position_next = max(position - step, log_target)
        if position_next == log_target:
            point = z
        else:
            point = _at_distance(z, math.exp(position_next), kernel)
        g = _FixedPointMap(point, c, H, kernel)
        candidate, r, iterations, _ = _iterate(g, h, cfg)
        total += iterations
        if r <= cfg.tol:
            h, position = candidate, position_next
            step = min(2.0 * step, math.log(2.0))
            continue
        step *= 0.5
        if step < MIN_CONTINUATION_STEP:
            return None
    return h, r, total


def solve_h(
    z: HalfPlanePoint | complex,
    c: float,
    H: SpectralMeasure,
    kernel: KernelTag = KernelTag.SKEW,
    cfg: FixedPointConfig | None = None,
) -> FixedPointSolution:
    """Solve for h(z) by damped Picard iteration with a Newton fallback.

    When neither converges from the starting point, as happens near z = 0
    for c ≥ 2/β where h is unbounded, h is followed by continuation from a
    point further from the boundary.

    Raises:
        DegenerateSpectrum: H is the point mass at zero
        NoConvergence: Neither scheme reached ``cfg.tol``
    """
    cfg = cfg or FixedPointConfig.from_config()
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}")
    if H.is_degenerate:
        raise DegenerateSpectrum("H is the point mass at zero; the LSD is δ₀")
    if not isinstance(z, HalfPlanePoint):
        z = HalfPlanePoint.for_kernel(z, kernel)
    elif z.half_plane is not kernel.half_plane:
        raise DomainError(f"{z.value} is not in the {kernel.half_plane.value} half-plane")

    g = _FixedPointMap(z.value, c, H, kernel)
    h0 = complex(cfg.initial_h) if cfg.initial_h is not None else _initial_h(g)
    if not g.inside(h0):
        raise DomainError(f"initial h {h0} is outside the {kernel.half_plane.value} half-plane")

    h, r, iterations, method = _iterate(g, h0, cfg)
    if r > cfg.tol:
        logger.debug("direct solve failed at z=%s (residual %.3g), trying continuation", z.value, r)
        marched = _continue_inward(z.value, c, H, kernel, cfg)
        if marched is None:
            raise NoConvergence(
                f"no convergence at z={z.value} after {iterations} iterations "
                f"(residual {r:.3g}), continuation failed as well",
                best_h=h,
                residual=r,
                iterations=iterations,
            )
        h, r, extra = marched
        iterations += extra
        method = "continuation"

    gamma, i1, i2 = g.diagnostics(h)
    return FixedPointSolution(
        z=z,
        h=h,
        s=stieltjes_s(z.value, c, h, kernel),
        residual=r,
        iterations=iterations,
        gamma=gamma,
        i1=i1,
        i2=i2,
        method=method,
    )


def stieltjes_s(z: complex, c: float, h: complex, kernel: KernelTag = KernelTag.SKEW) -> complex:
    """Recover s(z) from h(z)."""
    z = complex(z)
    ch = c * h
    if kernel is KernelTag.SKEW:
        return (2 / c - 1) / z + (1 / (1j * c * z)) * (1 / (1j + ch) - 1 / (-1j + ch))
    return (2 / c - 1) / z + (1 / (c * z)) * (1 / (-1 + ch) - 1 / (1 + ch))


def point_mass_zero_analytic(beta: float, c: float) -> float:
    """Mass of the LSD at 0 for H = (1 − β)δ₀ + βH₁."""
    if beta <= 0:
        raise DegenerateSpectrum("β = 0: H is the point mass at zero")
    if not 0 < beta <= 1 or c <= 0:
        raise DomainError(f"need 0 < beta <= 1 and c > 0, got beta={beta}, c={c}")
    if c < 2 / beta:
        return 1.0 - beta
    return 1.0 - 2.0 / c


def h_limit_at_zero(beta: float, c: float) -> float:
    """lim h(−ε) as ε ↓ 0; ``math.inf`` when c ≥ 2/β."""
    if beta <= 0:
        raise DegenerateSpectrum("β = 0: H is the point mass at zero")
    if c >= 2 / beta:
        return math.inf
    return math.sqrt(beta / (c * (2 - c * beta)))


def point_mass_sweep(beta: float, cs: Iterable[float]) -> list[tuple[float, float, float]]:
    """Rows of (c, point mass at 0, lim h(−ε)) over ``cs``."""
    return [(c, point_mass_zero_analytic(beta, c), h_limit_at_zero(beta, c)) for c in cs]


def stieltjes_fn(
    c: float,
    H: SpectralMeasure,
    kernel: KernelTag = KernelTag.SKEW,
    cfg: FixedPointConfig | None = None,
) -> Callable[[complex], complex]:
    """The LSD's Stieltjes transform as a function of z, solved afresh per call."""
    cfg = cfg or FixedPointConfig.from_config()

    def s(z: complex) -> complex:
        return solve_h(z, c, H, kernel, cfg).s

    return s


def tail_normalization(
    c: float,
    H: SpectralMeasure,
    y: float,
    kernel: KernelTag = KernelTag.SKEW,
    cfg: FixedPointConfig | None = None,
) -> complex:
    """y·s(−y) (skew) or −i·y·s(iy) (hermitian); tends to 1 as y → ∞."""
    if kernel is KernelTag.SKEW:
        return y * solve_h(-y, c, H, kernel, cfg).s
    return -1j * y * solve_h(1j * y, c, H, kernel, cfg).s


class _WarmStieltjes:
    """s(z) along one boundary line, warm-starting each solve from the previous h.

    Values are cached by z so repeated inversions at the same x reuse solves.
    """

    def __init__(self, c: float, H: SpectralMeasure, kernel: KernelTag, cfg: FixedPointConfig):
        self.c = c
        self.H = H
        self.kernel = kernel
        self.cfg = cfg
        self._last_h: complex | None = None
        self._cache: dict[complex, complex] = {}

    def __call__(self, z: complex) -> complex:
        z = complex(z)
        if z not in self._cache:
            cfg = self.cfg
            if self._last_h is not None:
                cfg = replace(cfg, initial_h=self._last_h)
            solution = solve_h(z, self.c, self.H, self.kernel, cfg)
            self._last_h = solution.h
            self._cache[z] = solution.s
        return self._cache[z]


@dataclass(frozen=True)
class _PointResult:
    x: float
    density: float
    error: float
    converged: bool
    point_mass: float | None = None
    failure: str | None = None


def _solve_point(
    x: float,
    c: float,
    H: SpectralMeasure,
    kernel: KernelTag,
    cfg: FixedPointConfig,
    inversion: InversionConfig,
    atom: float,
) -> _PointResult:
    s = _WarmStieltjes(c, H, kernel, cfg)
    try:
        point_mass = None
        if x == 0.0:
            point_mass = invert_point_mass(s, 0.0, inversion, kernel=kernel).value

        def s_continuous(z: complex) -> complex:
            # remove the atom at 0, which contributes −m/z
            return s(z) + atom / z

        result = invert_density(s_continuous, x, inversion, kernel=kernel)
    except (NoConvergence, RootSelectionAmbiguity, DomainError) as e:
        return _PointResult(x, 0.0, math.inf, False, failure=str(e))
    return _PointResult(x, result.value, result.error, result.converged, point_mass)


def bracket(
    c: float,
    H: SpectralMeasure,
    kernel: KernelTag = KernelTag.SKEW,
    cfg: FixedPointConfig | None = None,
    inversion: InversionConfig | None = None,
) -> float:
    """Half-width of an interval outside which the LSD density is indistinguishable from 0.

    Starts from the operator-norm bound 2·(1 + √c)²·λ_max(H) and grows by 1.5×.
    """
    cfg = cfg or FixedPointConfig.from_config()
    inversion = inversion or InversionConfig.from_config()
    atom = point_mass_zero_analytic(H.beta, c)
    x = 2 * (1 + math.sqrt(c)) ** 2 * H.lambda_max
    for _ in range(MAX_BRACKET_EXPANSIONS):
        result = _solve_point(x, c, H, kernel, cfg, inversion, atom)
        if result.density < max(SUPPORT_THRESHOLD, result.error):
            return x
        x *= 1.5
    logger.warning("density still above %g at x=%g", SUPPORT_THRESHOLD, x)
    return x


def support_from_density(
    half_grid: np.ndarray, density: np.ndarray, errors: np.ndarray | None = None
) -> tuple[float, float]:
    """(L, U) from the nonnegative half of a tabulated density.

    A point counts as inside the support when its density exceeds both 1e-8
    and, if given, its extrapolation error estimate.
    """
    threshold = SUPPORT_THRESHOLD
    if errors is not None:
        threshold = np.maximum(SUPPORT_THRESHOLD, errors)
    positive = np.nonzero(density > threshold)[0]
    if positive.size == 0:
        raise DomainError("density vanishes on the whole grid")
    lower = 0.0 if positive[0] == 0 else float(half_grid[positive[0] - 1])
    upper = float(half_grid[min(positive[-1] + 1, half_grid.size - 1)])
    return lower, upper


def lsd_curve(
    c: float,
    H: SpectralMeasure,
    kernel: KernelTag = KernelTag.SKEW,
    grid: GridSpec | None = None,
    cfg: FixedPointConfig | None = None,
    inversion: InversionConfig | None = None,
    threads: int = 1,
) -> LsdCurve:
    """Tabulate the LSD density on a symmetric grid by inverting s(z).

    The density is computed on x ≥ 0 and mirrored. The point mass at 0 is
    extracted numerically and compared with :func:`point_mass_zero_analytic`.
    At c·β = 2 the density diverges at 0; the analytic point mass is used and
    the origin node carries the remaining mass of the cell next to it.

    Raises:
        DegenerateSpectrum: H is the point mass at zero
        GridSolveError: The solver failed at one or more grid points
    """
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}")
    if H.is_degenerate:
        raise DegenerateSpectrum("H is the point mass at zero; the LSD is δ₀")
    grid = grid or GridSpec()
    cfg = cfg or FixedPointConfig.from_config()
    inversion = inversion or InversionConfig.from_config()

    atom = point_mass_zero_analytic(H.beta, c)
    x_max = grid.x_max if grid.x_max is not None else bracket(c, H, kernel, cfg, inversion)
    half = grid.half_grid(x_max)

    def work(x: float) -> _PointResult:
        return _solve_point(float(x), c, H, kernel, cfg, inversion, atom)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(work, half))

    failed = [r.x for r in results if r.failure is not None]
    if failed:
        raise GridSolveError(f"solver failed at {len(failed)} grid point(s)", failed)

    unconverged = [r.x for r in results if not r.converged]
    if unconverged:
        logger.debug("%d grid point(s) with extrapolation error above tolerance", len(unconverged))

    density_half = np.array([max(r.density, 0.0) for r in results])
    errors = np.array([r.error for r in results])
    lower, upper = support_from_density(half, density_half, errors)
    density_half[(half < lower) | (half > upper)] = 0.0

    numeric_mass = results[0].point_mass
    origin = {}
    if math.isclose(c * H.beta, 2.0, rel_tol=SINGULAR_ORIGIN_RTOL):
        # f(x) ~ |x|^(-1/3) near 0 and ε·s(−ε) − atom ~ ε^(2/3)
        logger.info("density diverges at x=0 for c·β=2; using the analytic point mass %.6f", atom)
        point_mass = atom
        if upper < half[-1]:
            density_half[0] = origin_cell_value(half, density_half, 0.5 * (1.0 - atom))
        else:
            logger.warning("support reaches x_max=%g; origin node copied from x=%g", x_max, half[1])
            density_half[0] = density_half[1]
        origin = {"origin_cell_value": float(density_half[0]), "point_mass_numeric": numeric_mass}
    else:
        if abs(numeric_mass - atom) > POINT_MASS_MISMATCH:
            logger.warning(
                "numeric point mass %.6f differs from analytic %.6f at c=%g", numeric_mass, atom, c
            )
        point_mass = min(max(numeric_mass, 0.0), 1.0 - 1e-15)

    return LsdCurve(
        c=c,
        grid=mirror(half),
        density=mirror_values(density_half),
        point_mass_zero=point_mass,
        support=(lower, upper),
        kernel=kernel,
        method="numeric",
        metadata={
            "solver": {"tol": cfg.tol, "max_iter": cfg.max_iter, "damping": cfg.damping},
            "eps_schedule": list(inversion.eps_schedule),
            "richardson_order": inversion.order,
            "point_mass_analytic": atom,
            "max_extrapolation_error": max(r.error for r in results),
            "unconverged_x": unconverged,
            **origin,
        },
    )

