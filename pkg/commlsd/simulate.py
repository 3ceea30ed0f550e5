"""Monte Carlo ensembles for the commutator and anticommutator.

S⁻ = n⁻¹·Σ^{1/2}(Z₁Z₂* − Z₂Z₁*)Σ^{1/2} is skew-Hermitian and
S⁺ = n⁻¹·Σ^{1/2}(Z₁Z₂* + Z₂Z₁*)Σ^{1/2} is Hermitian.
"""

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from commlsd.errors import DomainError, EigensolverError
from commlsd.measures import SpectralMeasure, StepCdf
from commlsd.models import EntryDistribution, EsdSample, KernelTag

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class EnsembleConfig:
    """Parameters of one simulated ensemble.

    ``sigma`` of ``None`` means Σ = I.
    """

    p: int
    n: int
    entry_dist: EntryDistribution = EntryDistribution.GAUSSIAN
    sigma: SpectralMeasure | None = None
    seed: int = 0
    kernel: KernelTag = KernelTag.SKEW

    def __post_init__(self):
        if self.p < 2:
            raise DomainError(f"p must be at least 2, got {self.p}")
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        if self.seed < 0:
            raise DomainError("seed must be nonnegative")

    @property
    def c_n(self) -> float:
        return self.p / self.n

    def sigma_diagonal(self) -> np.ndarray:
        """Diagonal of Σ with multiplicities proportional to the weights of H.

        Counts are rounded by the largest-remainder method so they sum to p;
        the mass at zero becomes zero eigenvalues.
        """
        if self.sigma is None:
            return np.ones(self.p)
        locations = list(self.sigma.locations)
        weights = list(self.sigma.weights)
        if self.sigma.zero_mass > 0:
            locations.insert(0, 0.0)
            weights.insert(0, self.sigma.zero_mass)
        quotas = self.p * np.asarray(weights)
        counts = np.floor(quotas).astype(int)
        short = self.p - int(counts.sum())
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:short]] += 1
        return np.repeat(np.asarray(locations, dtype=float), counts)

    def rng(self, replicate: int = 0) -> np.random.Generator:
        """Counter-based generator for one replicate.

        The stream equals ``SeedSequence(seed).spawn(...)[replicate]``.
        """
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(replicate,))
        return np.random.Generator(np.random.Philox(seq))


class EnsembleDraw(NamedTuple):
    z1: np.ndarray
    z2: np.ndarray
    sigma_half: np.ndarray
    row_permutation: list[int] | None


def _entries(rng: np.random.Generator, dist: EntryDistribution, shape) -> np.ndarray:
    if dist is EntryDistribution.GAUSSIAN:
        return rng.standard_normal(shape)
    if dist is EntryDistribution.UNIFORM:
        return rng.uniform(-SQRT3, SQRT3, shape)
    if dist is EntryDistribution.RADEMACHER:
        return 2.0 * rng.integers(0, 2, shape) - 1.0
    raise DomainError(f"no single-law sampler for {dist.value}")


def sample_ensemble(cfg: EnsembleConfig, replicate: int = 0) -> EnsembleDraw:
    """Draw Z₁, Z₂ and Σ^{1/2} for one replicate.

    For mixed entries the rows are shuffled and the first ⌈p/2⌉ shuffled rows
    of both matrices are Gaussian, the others uniform on (−√3, √3).
    """
    rng = cfg.rng(replicate)
    shape = (cfg.p, cfg.n)
    permutation = None
    if cfg.entry_dist is EntryDistribution.MIXED:
        permutation = rng.permutation(cfg.p)
        gaussian_rows = permutation[: math.ceil(cfg.p / 2)]
        matrices = []
        for _ in range(2):
            z = rng.uniform(-SQRT3, SQRT3, shape)
            z[gaussian_rows] = rng.standard_normal((gaussian_rows.size, cfg.n))
            matrices.append(z)
        z1, z2 = matrices
        permutation = permutation.tolist()
    else:
        z1 = _entries(rng, cfg.entry_dist, shape)
        z2 = _entries(rng, cfg.entry_dist, shape)
    return EnsembleDraw(z1, z2, np.sqrt(cfg.sigma_diagonal()), permutation)


def assemble(
    kernel: KernelTag,
    z1: np.ndarray,
    z2: np.ndarray,
    sigma_half: np.ndarray | None = None,
) -> np.ndarray:
    """S = n⁻¹·Σ^{1/2}(Z₁Z₂* ∓ Z₂Z₁*)Σ^{1/2}, exactly skew-Hermitian or Hermitian."""
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    if z1.ndim != 2 or z1.shape != z2.shape:
        raise DomainError(f"shape mismatch: {z1.shape} vs {z2.shape}")
    p, n = z1.shape
    d = np.ones(p) if sigma_half is None else np.asarray(sigma_half, dtype=float)
    if d.shape != (p,):
        raise DomainError(f"sigma_half must have length {p}")

    a = z1 @ z2.conj().T
    m = a - a.conj().T if kernel is KernelTag.SKEW else a + a.conj().T
    # symmetric weights keep the (skew-)Hermitian structure bit-exact
    weights = np.outer(d, d) / n
    return weights * m


def fingerprint(matrix: np.ndarray) -> str:
    """Short content hash of a matrix for error reports."""
    return hashlib.sha256(np.ascontiguousarray(matrix).tobytes()).hexdigest()[:16]


def hermitian_eigenpairs(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix."""
    try:
        return scipy.linalg.eigh(h)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigensolverError(f"Hermitian eigensolver failed: {e}", fingerprint(h)) from e


def _hermitian_eigenvalues(h: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.eigh(h, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigensolverError(f"Hermitian eigensolver failed: {e}", fingerprint(h)) from e


def eigenvalues(s: np.ndarray, kernel: KernelTag, n: int | None = None, **metadata) -> EsdSample:
    """Spectrum coordinates of S.

    Skew: the eigenvalues of the Hermitian matrix −iS, so that the eigenvalues
    of S are i·coords. Hermitian: the eigenvalues of S. ``n`` defaults to p.
    """
    s = np.asarray(s)
    p = s.shape[0]
    h = -1j * s if kernel is KernelTag.SKEW else s
    coords = _hermitian_eigenvalues(h)
    return EsdSample(
        coords=coords,
        p=p,
        n=n if n is not None else p,
        kernel=kernel,
        fingerprint=fingerprint(s),
        **metadata,
    )


def eigenvalues_real_skew(s: np.ndarray, n: int | None = None, **metadata) -> EsdSample:
    """Fast path for real skew-symmetric S.

    SᵀS = −S² is real symmetric with each |coord|² appearing twice; the
    sorted eigenvalues are paired and returned as ±√(pair mean), with a zero
    for odd p.
    """
    s = np.asarray(s)
    if np.iscomplexobj(s):
        raise DomainError("the real skew path needs a real matrix")
    p = s.shape[0]
    try:
        squares = np.clip(scipy.linalg.eigh(s.T @ s, eigvals_only=True), 0.0, None)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigensolverError(f"symmetric eigensolver failed: {e}", fingerprint(s)) from e
    odd = p % 2
    pairs = squares[odd:].reshape(-1, 2).mean(axis=1)
    magnitudes = np.sqrt(pairs)
    coords = np.concatenate([-magnitudes, magnitudes, np.zeros(odd)])
    return EsdSample(
        coords=coords,
        p=p,
        n=n if n is not None else p,
        kernel=KernelTag.SKEW,
        fingerprint=fingerprint(s),
        **metadata,
    )


def esd_cdf(sample: EsdSample) -> StepCdf:
    """Empirical CDF of the spectrum coordinates, jumps of 1/p."""
    return StepCdf.from_samples(sample.coords)


def simulate(cfg: EnsembleConfig, replicate: int = 0) -> EsdSample:
    """One replicate: draw, assemble and diagonalize."""
    draw = sample_ensemble(cfg, replicate)
    s = assemble(cfg.kernel, draw.z1, draw.z2, draw.sigma_half)
    logger.debug("replicate %d: p=%d n=%d kernel=%s", replicate, cfg.p, cfg.n, cfg.kernel.value)
    return eigenvalues(
        s,
        cfg.kernel,
        n=cfg.n,
        entry_dist=cfg.entry_dist,
        seed=cfg.seed,
        replicate=replicate,
        row_permutation=draw.row_permutation,
    )


def simulate_replicates(
    cfg: EnsembleConfig, replicates: int = 1, threads: int = 1
) -> list[EsdSample]:
    """Independent replicates, in replicate order regardless of scheduling."""
    if replicates < 1:
        raise DomainError("need at least one replicate")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(lambda r: simulate(cfg, r), range(replicates)))
