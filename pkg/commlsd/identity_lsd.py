"""Closed-form LSD of the commutator for identity covariance.

With Σ = I the transform s(z) is a root of the cubic

    c²z·m³ + (c² − 2c)·m² + z·m + 1 = 0,

which Cardano's method solves explicitly. The density, its support and the
atom at 0 follow from the same coefficients.
"""

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from commlsd.errors import DomainError, RootSelectionAmbiguity
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

OMEGA = cmath.exp(2j * math.pi / 3)
ROOT_SELECTION_TOL = 1e-10
SQRT3_OVER_2PI = math.sqrt(3) / (2 * math.pi)


@dataclass(frozen=True)
class CardanoCoefficients:
    """The c-dependent coefficients of Q(z), R(z) and d(x)."""

    c: float
    q0: float
    q2: float
    r1: float
    r3: float
    d0: float
    d2: float
    d4: float

    def Q(self, z: complex) -> complex:  # noqa: N802
        return self.q0 + self.q2 / z**2

    def R(self, z: complex) -> complex:  # noqa: N802
        return self.r1 / z + self.r3 / z**3

    def shift(self, z: complex) -> complex:
        """Translation removing the quadratic term of the cubic."""
        return -(1 - 2 / self.c) / (3 * z)

    def discriminant(self) -> float:
        """d2² − 4·d0·d4, which equals ((4c + 1)/(9c⁴))³."""
        return self.d2**2 - 4 * self.d0 * self.d4


def coefficients(c: float) -> CardanoCoefficients:
    """Cardano coefficients for aspect ratio ``c``."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    return CardanoCoefficients(
        c=c,
        q0=1 / (3 * c**2),
        q2=-((c - 2) ** 2) / (9 * c**2),
        r1=-(c + 1) / (3 * c**3),
        r3=-((c - 2) ** 3) / (27 * c**3),
        d0=1 / (27 * c**6),
        d2=(2 * c**2 + 10 * c - 1) / (27 * c**6),
        d4=(1 - 2 / c) ** 3 / (27 * c**2),
    )


@dataclass(frozen=True)
class SupportSpec:
    """Support [L, U] of the absolutely continuous part and the atom at 0."""

    c: float
    R_plus: float  # noqa: N815
    R_minus: float  # noqa: N815
    L: float  # noqa: N815
    U: float  # noqa: N815
    point_mass_zero: float


def support(c: float) -> SupportSpec:
    """Support endpoints √R₋, √R₊ where R± are the roots of d0·y² − d2·y + d4."""
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    r_plus = 0.5 * ((2 * c**2 + 10 * c - 1) + (4 * c + 1) ** 1.5)
    # product form R₊R₋ = d4/d0 avoids cancellation in R₋
    r_minus = c * (c - 2) ** 3 / r_plus
    return SupportSpec(
        c=c,
        R_plus=r_plus,
        R_minus=r_minus,
        L=math.sqrt(r_minus) if r_minus > 0 else 0.0,
        U=math.sqrt(r_plus),
        point_mass_zero=max(0.0, 1 - 2 / c),
    )


@dataclass(frozen=True)
class DensityEval:
    """Intermediate quantities of the density formula at one point."""

    x: float
    r_abs: float
    q: float
    d: float
    v_plus: float
    v_minus: float
    f: float


def rqd_at(x: float, coeffs: CardanoCoefficients) -> tuple[float, float, float]:
    """|r(x)|, q(x) and d(x) = r(x)² + q(x)³ on the imaginary axis, for x ≠ 0."""
    if x == 0:
        raise DomainError("rqd_at is undefined at x = 0")
    ax = abs(x)
    r_abs = abs(-coeffs.r1 / ax + coeffs.r3 / ax**3)
    q = coeffs.q0 - coeffs.q2 / x**2
    d = coeffs.d0 - coeffs.d2 / x**2 + coeffs.d4 / x**4
    return r_abs, q, d


def _density_at_zero(c: float) -> float:
    if c < 2:
        return 1 / (math.pi * math.sqrt(2 * c - c**2))
    if c == 2:
        return math.inf
    return 0.0


def evaluate(x: float, c: float) -> DensityEval:
    """Density at ``x`` together with the quantities it is built from."""
    coeffs = coefficients(c)
    r_abs, q, d = rqd_at(x, coeffs)
    if d >= 0:
        return DensityEval(x, r_abs, q, d, r_abs, r_abs, 0.0)
    root = math.sqrt(-d)
    v_plus = r_abs + root
    v_minus = max(r_abs - root, 0.0)
    f = SQRT3_OVER_2PI * (np.cbrt(v_plus) - np.cbrt(v_minus))
    return DensityEval(x, r_abs, q, d, v_plus, v_minus, float(f))


def density(x, c: float):
    """Absolutely continuous density f_c(x); accepts a scalar or an array.

    At x = 0 the value is 1/(π√(2c − c²)) for c < 2, +inf for c = 2 and 0
    for c > 2, where the atom at 0 takes over.
    """
    coeffs = coefficients(c)
    x_arr = np.asarray(x, dtype=float)
    ax = np.abs(x_arr)
    at_zero = ax == 0
    safe = np.where(at_zero, 1.0, ax)

    r_abs = np.abs(-coeffs.r1 / safe + coeffs.r3 / safe**3)
    d = coeffs.d0 - coeffs.d2 / safe**2 + coeffs.d4 / safe**4
    root = np.sqrt(np.clip(-d, 0.0, None))
    v_plus = np.clip(r_abs + root, 0.0, None)
    v_minus = np.clip(r_abs - root, 0.0, None)
    f = np.where(d < 0, SQRT3_OVER_2PI * (np.cbrt(v_plus) - np.cbrt(v_minus)), 0.0)
    f = np.where(at_zero, _density_at_zero(c), f)
    return float(f) if f.ndim == 0 else f


def _cubic(m: complex, z: complex, c: float) -> complex:
    return c**2 * z * m**3 + (c**2 - 2 * c) * m**2 + z * m + 1


def _cubic_prime(m: complex, z: complex, c: float) -> complex:
    return 3 * c**2 * z * m**2 + 2 * (c**2 - 2 * c) * m + z


def _polish(m: complex, z: complex, c: float, steps: int = 2) -> complex:
    residual = abs(_cubic(m, z, c))
    for _ in range(steps):
        slope = _cubic_prime(m, z, c)
        if slope == 0:
            break
        candidate = m - _cubic(m, z, c) / slope
        candidate_residual = abs(_cubic(candidate, z, c))
        if candidate_residual >= residual:
            break
        m, residual = candidate, candidate_residual
    return m


def cardano_roots(z: complex, c: float) -> tuple[complex, complex, complex]:
    """All three roots of the cubic at ``z`` by Cardano's method."""
    z = complex(z)
    if z == 0:
        raise DomainError("cardano_roots is undefined at z = 0")
    coeffs = coefficients(c)
    Q, R = coeffs.Q(z), coeffs.R(z)  # noqa: N806
    root = cmath.sqrt(R**2 + Q**3)
    cube = R + root if abs(R + root) >= abs(R - root) else R - root
    S = cube ** (1 / 3) if cube != 0 else 0j  # noqa: N806
    T = -Q / S if S != 0 else 0j  # noqa: N806
    shift = coeffs.shift(z)
    roots = (
        shift + S + T,
        shift + OMEGA * S + OMEGA**2 * T,
        shift + OMEGA**2 * S + OMEGA * T,
    )
    return tuple(_polish(m, z, c) for m in roots)


def select_stieltjes_root(
    roots: tuple[complex, ...], z: HalfPlanePoint | complex
) -> complex:
    """The unique root in the open right half-plane.

    Raises:
        RootSelectionAmbiguity: No root or several roots have Re > 1e-10
    """
    z = z.value if isinstance(z, HalfPlanePoint) else complex(z)
    candidates = [m for m in roots if m.real > ROOT_SELECTION_TOL]
    if len(candidates) != 1:
        raise RootSelectionAmbiguity(
            f"{len(candidates)} roots with positive real part at z={z}", tuple(roots), z
        )
    return candidates[0]


def stieltjes(
    z: HalfPlanePoint | complex, c: float, kernel: KernelTag = KernelTag.SKEW
) -> complex:
    """Closed-form Stieltjes transform of the identity-covariance LSD.

    The hermitian transform is obtained from the skew one as s⁺(w) = i·s(iw).
    """
    if not isinstance(z, HalfPlanePoint):
        z = HalfPlanePoint.for_kernel(z, kernel)
    if kernel is KernelTag.SKEW:
        return select_stieltjes_root(cardano_roots(z.value, c), z)
    w = 1j * z.value
    return 1j * select_stieltjes_root(cardano_roots(w, c), w)


def closed_form_curve(
    c: float, grid: GridSpec | None = None, kernel: KernelTag = KernelTag.SKEW
) -> LsdCurve:
    """Tabulate the closed-form density on a symmetric grid.

    Defaults to x_max = 1.25·U. At c = 2 the density diverges at 0; the
    value at the origin node is then chosen so that the tabulated curve
    carries the exact continuous mass.
    """
    edges = support(c)
    grid = grid or GridSpec()
    half = grid.half_grid(grid.x_max if grid.x_max is not None else 1.25 * edges.U)
    values = density(half, c)
    metadata = {"R_plus": edges.R_plus, "R_minus": edges.R_minus}
    if not math.isfinite(values[0]):
        beyond = quad(density, half[-1], edges.U, args=(c,))[0] if half[-1] < edges.U else 0.0
        half_mass = 0.5 * (1.0 - edges.point_mass_zero) - beyond
        values[0] = origin_cell_value(half, values, half_mass)
        metadata["origin_cell_value"] = float(values[0])
        logger.info("density diverges at x=0 for c=%g; origin node set to %.6g", c, values[0])
    return LsdCurve(
        c=c,
        grid=mirror(half),
        density=mirror_values(values),
        point_mass_zero=edges.point_mass_zero,
        support=(edges.L, edges.U),
        kernel=kernel,
        method="closed_form",
        metadata=metadata,
    )
