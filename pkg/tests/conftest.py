"""Shared fixtures."""

import pytest

from commlsd.config import reset_config
from commlsd.measures import SpectralMeasure


@pytest.fixture(autouse=True)
def fresh_config():
    """Reread the environment for every test."""
    reset_config()
    yield
    reset_config()


@pytest.fixture
def identity():
    """H = δ₁."""
    return SpectralMeasure.identity()


@pytest.fixture
def two_atoms():
    """H with atoms at 1 and 3."""
    return SpectralMeasure((1.0, 3.0), (0.5, 0.5))


@pytest.fixture
def with_zero_mass():
    """H = 0.3·δ₀ + 0.7·δ₁."""
    return SpectralMeasure((1.0,), (0.7,), zero_mass=0.3)
