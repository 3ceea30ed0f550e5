"""Configuration loading for commlsd."""

import os
from dataclasses import dataclass, field
from pathlib import Path

from commlsd.errors import ConfigError

_config_instance: "Config | None" = None

DEFAULT_EPS_SCHEDULE = (1e-2, 5e-3, 2.5e-3, 1.25e-3)


def _env(name: str, parse):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return parse(raw.strip())
    except ValueError as e:
        raise ConfigError(f"Cannot parse {name}={raw!r}: {e}") from e


def parse_schedule(raw: str) -> tuple[float, ...]:
    """Parse a comma separated, strictly decreasing list of positive epsilons."""
    values = tuple(float(part) for part in raw.split(",") if part.strip())
    if len(values) < 2:
        raise ValueError("need at least two epsilons")
    if any(v <= 0 for v in values):
        raise ValueError("epsilons must be positive")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    return values


@dataclass
class Config:
    """Library defaults, overridable from the environment."""

    tol: float = 1e-12
    max_iter: int = 2000
    damping: float = 0.5
    eps_schedule: tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    richardson_order: int = 1
    threads: int = 1
    output_dir: Path = field(default_factory=lambda: Path("./commlsd-out"))

    def __post_init__(self):
        """Load values from environment."""
        overrides = {
            "tol": _env("COMMLSD_TOL", float),
            "max_iter": _env("COMMLSD_MAX_ITER", int),
            "damping": _env("COMMLSD_DAMPING", float),
            "eps_schedule": _env("COMMLSD_EPS_SCHEDULE", parse_schedule),
            "richardson_order": _env("COMMLSD_RICHARDSON_ORDER", int),
            "threads": _env("COMMLSD_THREADS", int),
            "output_dir": _env("COMMLSD_OUTPUT_DIR", Path),
        }
        for name, value in overrides.items():
            if value is not None:
                setattr(self, name, value)

        if self.threads < 1:
            raise ConfigError("COMMLSD_THREADS must be at least 1")
        if not 1 <= self.richardson_order < len(self.eps_schedule):
            raise ConfigError(
                "COMMLSD_RICHARDSON_ORDER must be between 1 and len(eps_schedule) - 1"
            )


def get_config() -> Config:
    """Get the global config instance (singleton)."""
    global _config_instance
    if _config_instance is None:
        _config_instance = Config()
    return _config_instance


def reset_config() -> None:
    """Drop the cached instance so the next get_config() rereads the environment."""
    global _config_instance
    _config_instance = None
