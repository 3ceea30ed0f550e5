"""Exception hierarchy for commlsd."""


class CommLsdError(Exception):
    """Base class for all commlsd errors."""

    pass


class DomainError(CommLsdError, ValueError):
    """An input violates an operation's precondition."""

    pass


class ConfigError(CommLsdError):
    """An environment override could not be parsed."""

    pass


class DegenerateSpectrum(CommLsdError):
    """The covariance spectrum is the point mass at zero.

    The LSD is then the point mass at zero as well; there is nothing to solve.
    """

    pass


class NoConvergence(CommLsdError):
    """The fixed-point solver failed to reach its tolerance."""

    def __init__(self, message: str, best_h: complex, residual: float, iterations: int):
        super().__init__(message)
        self.best_h = best_h
        self.residual = residual
        self.iterations = iterations


class RootSelectionAmbiguity(CommLsdError):
    """Zero or several cubic roots lie in the right half-plane."""

    def __init__(self, message: str, roots: tuple[complex, ...], z: complex):
        super().__init__(message)
        self.roots = roots
        self.z = z


class EigensolverError(CommLsdError):
    """The Hermitian eigensolver did not converge."""

    def __init__(self, message: str, fingerprint: str):
        super().__init__(f"{message} (matrix {fingerprint})")
        self.fingerprint = fingerprint


class GridSolveError(CommLsdError):
    """One or more grid points of a curve sweep failed."""

    def __init__(self, message: str, failed_x: list[float]):
        super().__init__(message)
        self.failed_x = failed_x
