"""Data models for commlsd."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import trapezoid

from commlsd.errors import DomainError


class HalfPlane(Enum):
    """Open half-plane on which a Stieltjes transform is evaluated."""

    LEFT = "left"
    UPPER = "upper"


class KernelTag(Enum):
    """Which random matrix the quantities belong to.

    ``SKEW`` is the commutator S⁻ (spectrum on the imaginary axis, kernel ρ),
    ``HERMITIAN`` the anticommutator S⁺ (spectrum on the real axis, kernel σ).
    """

    SKEW = "skew"
    HERMITIAN = "hermitian"

    @property
    def half_plane(self) -> HalfPlane:
        """Half-plane on which transforms for this kernel live."""
        return HalfPlane.LEFT if self is KernelTag.SKEW else HalfPlane.UPPER

    @property
    def axis(self) -> complex:
        """Unit vector of the axis carrying the spectrum."""
        return 1j if self is KernelTag.SKEW else 1.0 + 0j

    @classmethod
    def parse(cls, value: str) -> "KernelTag":
        """Parse a kernel name, accepting ``minus``/``plus`` as aliases."""
        aliases = {"minus": cls.SKEW, "plus": cls.HERMITIAN}
        value = value.strip().lower()
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError as e:
            raise DomainError(f"Unknown kernel: {value!r}") from e


class EntryDistribution(Enum):
    """Law of the i.i.d. matrix entries (all mean 0, variance 1)."""

    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    RADEMACHER = "rademacher"
    MIXED = "mixed"


@dataclass(frozen=True)
class HalfPlanePoint:
    """A complex number strictly inside an open half-plane."""

    value: complex
    half_plane: HalfPlane

    def __post_init__(self):
        """Coerce to complex and check the half-plane membership."""
        value = complex(self.value)
        object.__setattr__(self, "value", value)
        if self.half_plane is HalfPlane.LEFT and not value.real < 0:
            raise DomainError(f"{value} is not in the open left half-plane")
        if self.half_plane is HalfPlane.UPPER and not value.imag > 0:
            raise DomainError(f"{value} is not in the open upper half-plane")

    @classmethod
    def for_kernel(cls, value: complex, kernel: KernelTag) -> "HalfPlanePoint":
        """Build a point in the half-plane matching ``kernel``."""
        return cls(value, kernel.half_plane)


@dataclass(frozen=True)
class GridSpec:
    """Symmetric evaluation grid for LSD curves.

    The grid is built as the mirror image of ``points // 2 + 1`` nonnegative
    nodes, so it always contains 0 and is exactly symmetric.
    """

    points: int = 401
    x_max: float | None = None

    def __post_init__(self):
        """Validate grid parameters."""
        if self.points < 3:
            raise DomainError("A grid needs at least 3 points")
        if self.x_max is not None and not self.x_max > 0:
            raise DomainError("x_max must be positive")

    def half_grid(self, x_max: float) -> np.ndarray:
        """Nonnegative half of the grid, starting at 0."""
        return np.linspace(0.0, x_max, self.points // 2 + 1)

    def build(self, x_max: float) -> np.ndarray:
        """Full symmetric grid on [-x_max, x_max]."""
        return mirror(self.half_grid(x_max))


def mirror(half: np.ndarray) -> np.ndarray:
    """Reflect a grid starting at 0 onto the negative axis."""
    return np.concatenate([-half[:0:-1], half])


def mirror_values(half_values: np.ndarray) -> np.ndarray:
    """Values on a mirrored grid from values on its nonnegative half."""
    return np.concatenate([half_values[:0:-1], half_values])


@dataclass(eq=False)
class LsdCurve:
    """Density of a limiting spectral distribution tabulated on a grid."""

    c: float
    grid: np.ndarray
    density: np.ndarray
    point_mass_zero: float
    support: tuple[float, float]
    kernel: KernelTag
    method: str = "numeric"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        """Normalize arrays and check structural invariants."""
        self.grid = np.asarray(self.grid, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.grid.shape != self.density.shape or self.grid.ndim != 1:
            raise DomainError("grid and density must be 1-D arrays of equal length")
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("grid must be strictly increasing")
        if np.any(self.density < 0):
            raise DomainError("density must be nonnegative")
        if not 0.0 <= self.point_mass_zero < 1.0:
            raise DomainError("point_mass_zero must lie in [0, 1)")
        lower, upper = self.support
        if not 0.0 <= lower < upper:
            raise DomainError(f"invalid support [{lower}, {upper}]")

    def total_mass(self) -> float:
        """Trapezoidal mass of the density plus the atom at zero."""
        return float(trapezoid(self.density, self.grid)) + self.point_mass_zero


@dataclass(eq=False)
class EsdSample:
    """Sorted spectrum coordinates of one simulated matrix.

    For S⁻ the coordinates are the imaginary parts of its eigenvalues, for S⁺
    the eigenvalues themselves.
    """

    coords: np.ndarray
    p: int
    n: int
    kernel: KernelTag
    entry_dist: EntryDistribution | None = None
    seed: int | None = None
    replicate: int = 0
    row_permutation: list[int] | None = None
    fingerprint: str = ""

    def __post_init__(self):
        """Sort coordinates and check the length."""
        self.coords = np.sort(np.asarray(self.coords, dtype=float))
        if self.coords.shape != (self.p,):
            raise DomainError(f"expected {self.p} coordinates, got {self.coords.shape}")

    @property
    def c_n(self) -> float:
        """Aspect ratio p/n of the simulated matrices."""
        return self.p / self.n


@dataclass
class ComparisonReport:
    """Distances between an empirical spectrum and a theoretical LSD."""

    ks: float
    levy: float
    l1_hist: float
    point_mass_est: float
    support_violation_frac: float
    p: int
    n: int
    replicates: int = 1
    atom_window: float = 0.0

    def __post_init__(self):
        """Check metric ranges."""
        if min(self.ks, self.levy, self.l1_hist, self.point_mass_est) < 0:
            raise DomainError("comparison metrics must be nonnegative")
        if self.ks > 1 + 1e-12 or self.levy > self.ks + 1e-12:
            raise DomainError("expected levy <= ks <= 1")

    def to_dict(self) -> dict:
        """JSON-serializable view."""
        return {
            "ks": self.ks,
            "levy": self.levy,
            "l1_hist": self.l1_hist,
            "point_mass_est": self.point_mass_est,
            "support_violation_frac": self.support_violation_frac,
            "p": self.p,
            "n": self.n,
            "replicates": self.replicates,
            "atom_window": self.atom_window,
        }


def origin_cell_value(half: np.ndarray, half_values: np.ndarray, half_mass: float) -> float:
    """Node value at x = 0 that gives the half grid a trapezoidal mass of ``half_mass``.

    For densities with an integrable singularity at the origin, where the
    tabulated value at 0 is not meaningful.
    """
    rest = float(trapezoid(half_values[1:], half[1:]))
    step = float(half[1] - half[0])
    return max(2.0 * (half_mass - rest) / step - float(half_values[1]), 0.0)
