"""commlsd - Limiting spectral distributions of random commutators and anticommutators."""

__version__ = "0.1.0"
