"""The rational kernels of the fixed-point equations.

ρ and ρ₂ belong to the commutator (skew) case, σ and σ₂ to the
anticommutator (hermitian) case. All functions take and return Python scalars.
"""

from collections.abc import Callable

from commlsd.errors import DomainError
from commlsd.models import KernelTag

POLE_GUARD = 1e-12


def _check_poles(z: complex, poles: tuple[complex, complex]) -> complex:
    z = complex(z)
    for pole in poles:
        if abs(z - pole) < POLE_GUARD:
            raise DomainError(f"kernel evaluated at pole {pole} (z = {z})")
    return z


def rho(z: complex) -> complex:
    """ρ(z) = 1/(i+z) + 1/(−i+z)."""
    z = _check_poles(z, (1j, -1j))
    return 1 / (1j + z) + 1 / (-1j + z)


def rho2(z: complex) -> float:
    """ρ₂(z) = 1/|i+z|² + 1/|−i+z|²."""
    z = _check_poles(z, (1j, -1j))
    return 1 / abs(1j + z) ** 2 + 1 / abs(-1j + z) ** 2


def rho_prime(z: complex) -> complex:
    z = _check_poles(z, (1j, -1j))
    return -1 / (1j + z) ** 2 - 1 / (-1j + z) ** 2


def sigma(z: complex) -> complex:
    """σ(z) = 1/(1+z) + 1/(−1+z)."""
    z = _check_poles(z, (1, -1))
    return 1 / (1 + z) + 1 / (-1 + z)


def sigma2(z: complex) -> float:
    """σ₂(z) = 1/|1+z|² + 1/|−1+z|²."""
    z = _check_poles(z, (1, -1))
    return 1 / abs(1 + z) ** 2 + 1 / abs(-1 + z) ** 2


def sigma_prime(z: complex) -> complex:
    z = _check_poles(z, (1, -1))
    return -1 / (1 + z) ** 2 - 1 / (-1 + z) ** 2


_KERNELS: dict[KernelTag, tuple[Callable, Callable, Callable]] = {
    KernelTag.SKEW: (rho, rho2, rho_prime),
    KernelTag.HERMITIAN: (sigma, sigma2, sigma_prime),
}


def kernel(tag: KernelTag) -> Callable[[complex], complex]:
    """ρ for skew, σ for hermitian."""
    return _KERNELS[tag][0]


def kernel_modulus(tag: KernelTag) -> Callable[[complex], float]:
    """ρ₂ for skew, σ₂ for hermitian."""
    return _KERNELS[tag][1]


def kernel_derivative(tag: KernelTag) -> Callable[[complex], complex]:
    """Complex derivative of ``kernel(tag)``."""
    return _KERNELS[tag][2]
