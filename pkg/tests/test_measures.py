"""Tests for spectral measures, inversion and CDF distances."""

import math

import numpy as np
import pytest
from scipy import stats

from commlsd.errors import DomainError
from commlsd.identity_lsd import closed_form_curve
from commlsd.measures import (
    CurveCdf,
    DiscreteMeasure,
    InversionConfig,
    SpectralMeasure,
    StepCdf,
    cdf_interval,
    invert_density,
    invert_point_mass,
    ks_and_levy,
    read_spectral_measure,
    richardson_extrapolate,
    stieltjes_eval,
    write_spectral_measure,
)
from commlsd.models import EsdSample, GridSpec, HalfPlanePoint, KernelTag


def cauchy_transform(z):
    """Stieltjes transform of the standard Cauchy law on the real axis."""
    return -1 / (z + 1j)


class TestSpectralMeasure:
    """Tests for SpectralMeasure."""

    def test_identity(self):
        """δ₁ has β = 1 and λ_max = 1."""
        H = SpectralMeasure.identity()
        assert H.beta == 1.0
        assert H.lambda_max == 1.0
        assert not H.is_degenerate

    def test_zero_atoms_fold_into_zero_mass(self):
        """An atom at 0 becomes zero_mass."""
        H = SpectralMeasure((0.0, 1.0), (0.3, 0.7))
        assert H.locations == (1.0,)
        assert H.zero_mass == pytest.approx(0.3)
        assert H.beta == pytest.approx(0.7)

    def test_total_mass_checked(self):
        """Weights must sum to 1."""
        with pytest.raises(DomainError):
            SpectralMeasure((1.0, 2.0), (0.5, 0.4))

    def test_negative_location_rejected(self):
        """Covariance eigenvalues are nonnegative."""
        with pytest.raises(DomainError):
            SpectralMeasure((-1.0,), (1.0,))

    def test_degenerate(self):
        """H = δ₀ is representable and flagged."""
        H = SpectralMeasure((), (), zero_mass=1.0)
        assert H.is_degenerate
        with pytest.raises(DomainError):
            H.positive_part()

    def test_positive_part(self, with_zero_mass):
        """H₁ renormalizes the positive atoms."""
        H1 = with_zero_mass.positive_part()
        assert H1.weights == pytest.approx((1.0,))
        assert H1.zero_mass == 0.0

    def test_from_quantiles(self):
        """Midpoint quantiles of Exp(1) with equal weights."""
        H = SpectralMeasure.from_quantiles(stats.expon.ppf, atoms=4, zero_mass=0.2)
        assert len(H.locations) == 4
        assert H.weights == pytest.approx((0.2,) * 4)
        assert H.locations[0] == pytest.approx(-math.log(1 - 0.125))
        assert H.zero_mass == 0.2

    def test_mean(self, two_atoms):
        """∫λ dH for atoms at 1 and 3."""
        assert two_atoms.mean() == pytest.approx(2.0)


class TestSpectralMeasureFiles:
    """Tests for the H-file text format."""

    def test_read_with_header(self, tmp_path):
        """zero_mass header and comments are understood."""
        path = tmp_path / "h.txt"
        path.write_text("# covariance spectrum\nzero_mass 0.3\n1.0 0.7\n")
        H = read_spectral_measure(path)
        assert H.zero_mass == pytest.approx(0.3)
        assert H.locations == (1.0,)

    def test_write_then_read(self, tmp_path, two_atoms):
        """Written files read back to the same measure."""
        path = tmp_path / "h.txt"
        write_spectral_measure(two_atoms, path)
        assert read_spectral_measure(path) == two_atoms

    def test_malformed_line(self, tmp_path):
        """A line with three fields is rejected with its line number."""
        path = tmp_path / "h.txt"
        path.write_text("1.0 0.5 2\n")
        with pytest.raises(DomainError, match=":1:"):
            read_spectral_measure(path)

    def test_header_after_atoms(self, tmp_path):
        """zero_mass must come first."""
        path = tmp_path / "h.txt"
        path.write_text("1.0 0.7\nzero_mass 0.3\n")
        with pytest.raises(DomainError):
            read_spectral_measure(path)


class TestStieltjesEval:
    """Tests for transforms of discrete measures."""

    def test_atom_at_origin(self):
        """Unit atom at 0, z = −1 gives 1."""
        measure = DiscreteMeasure((0.0,), (1.0,))
        assert stieltjes_eval(measure, -1.0) == pytest.approx(1.0)

    def test_atom_near_boundary(self):
        """Unit atom at i·a, z = −ε + i·a gives 1/ε."""
        measure = DiscreteMeasure((2.0,), (1.0,))
        assert stieltjes_eval(measure, -1e-3 + 2j) == pytest.approx(1e3)

    def test_symmetric_pair(self):
        """Atoms ±i with weight 1/2 at z = −1 give 1/2."""
        measure = DiscreteMeasure((-1.0, 1.0), (0.5, 0.5))
        assert stieltjes_eval(measure, -1.0) == pytest.approx(0.5)

    def test_conjugation_and_bound(self):
        """s(z̄) = conj s(z) for symmetric measures, and |s| ≤ 1/|Re z|."""
        rng = np.random.default_rng(5)
        t = rng.standard_normal(20)
        measure = DiscreteMeasure(tuple(np.concatenate([t, -t])), (1 / 40,) * 40)
        for z in (-0.5 + 1j, -2 - 0.3j, -1e-2 + 0.1j):
            value = stieltjes_eval(measure, z)
            assert stieltjes_eval(measure, z.conjugate()) == pytest.approx(value.conjugate())
            assert abs(value) <= 1 / abs(z.real)

    def test_skew_single_atom(self):
        """δ at i: 1/(i + 1) at z = −1."""
        measure = DiscreteMeasure((1.0,), (1.0,), KernelTag.SKEW)
        assert stieltjes_eval(measure, -1.0) == pytest.approx((1 - 1j) / 2)

    def test_hermitian_single_atom(self):
        """δ at 1: 1/(1 − i) at z = i."""
        measure = DiscreteMeasure((1.0,), (1.0,), KernelTag.HERMITIAN)
        point = HalfPlanePoint(1j, KernelTag.HERMITIAN.half_plane)
        assert stieltjes_eval(measure, point) == pytest.approx((1 + 1j) / 2)

    def test_on_axis_rejected(self):
        """The transform is undefined on the spectral axis."""
        with pytest.raises(DomainError):
            stieltjes_eval(DiscreteMeasure((1.0,), (1.0,), KernelTag.SKEW), 0.5j)
        with pytest.raises(DomainError):
            stieltjes_eval(DiscreteMeasure((1.0,), (1.0,), KernelTag.HERMITIAN), 0.5)

    def test_from_sample(self):
        """ESD weights are 1/p."""
        sample = EsdSample([-1.0, 0.0, 1.0, 2.0], p=4, n=4, kernel=KernelTag.SKEW)
        measure = DiscreteMeasure.from_sample(sample)
        assert measure.weights == (0.25,) * 4
        assert measure.kernel is KernelTag.SKEW


class TestRichardson:
    """Tests for extrapolation to ε = 0."""

    def test_linear_is_exact(self):
        """A linear sequence extrapolates exactly with zero error."""
        eps = [1e-2, 5e-3, 2.5e-3, 1.25e-3]
        value, error = richardson_extrapolate(eps, [3 + 2 * e for e in eps], order=1)
        assert value == pytest.approx(3.0, abs=1e-12)
        assert error == pytest.approx(0.0, abs=1e-12)

    def test_quadratic_with_order_two(self):
        """Order 2 removes the quadratic term."""
        eps = [1e-2, 5e-3, 2.5e-3, 1.25e-3]
        value, _ = richardson_extrapolate(eps, [1 - e + 4 * e**2 for e in eps], order=2)
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_too_few_samples(self):
        """Order 2 needs three samples."""
        with pytest.raises(DomainError):
            richardson_extrapolate([1e-2, 1e-3], [1.0, 1.0], order=2)

    def test_config_validation(self):
        """Schedules must decrease."""
        with pytest.raises(DomainError):
            InversionConfig(eps_schedule=(1e-3, 1e-2))


class TestInversion:
    """Tests for density, atom and interval inversion."""

    def test_density_of_cauchy(self):
        """The standard Cauchy density at 0 is 1/π."""
        result = invert_density(cauchy_transform, 0.0, kernel=KernelTag.HERMITIAN)
        assert result.value == pytest.approx(1 / math.pi, abs=1e-5)
        assert result.converged
        assert len(result.samples) == 4

    def test_density_away_from_atom(self):
        """A unit atom at i·2 has no density at x = 0."""
        measure = DiscreteMeasure((2.0,), (1.0,))
        result = invert_density(lambda z: stieltjes_eval(measure, z), 0.0)
        assert result.value == pytest.approx(0.0, abs=1e-6)

    def test_density_of_identity_lsd(self):
        """f(0) = 1/π at c = 1 and f(4) = 0 beyond the support."""
        from commlsd.identity_lsd import stieltjes

        at_zero = invert_density(lambda z: stieltjes(z, 1.0), 0.0)
        beyond = invert_density(lambda z: stieltjes(z, 1.0), 4.0)
        assert at_zero.value == pytest.approx(1 / math.pi, abs=1e-4)
        assert beyond.value == pytest.approx(0.0, abs=1e-6)

    def test_unit_atom_at_origin(self):
        """Atom 1 at x = 0 and none at x = 1."""
        measure = DiscreteMeasure((0.0,), (1.0,))

        def s(z):
            return stieltjes_eval(measure, z)

        assert invert_point_mass(s, 0.0).value == pytest.approx(1.0, abs=1e-12)
        assert invert_point_mass(s, 1.0).value == pytest.approx(0.0, abs=1e-5)

    def test_point_mass_of_discrete_measure(self):
        """0.4·δ₀ + 0.6·δ_i has an atom 0.4 at 0 and none at 0.5."""
        measure = DiscreteMeasure((0.0, 1.0), (0.4, 0.6), KernelTag.SKEW)

        def s(z):
            return stieltjes_eval(measure, z)

        assert invert_point_mass(s, 0.0).value == pytest.approx(0.4, abs=1e-5)
        assert invert_point_mass(s, 0.5).value == pytest.approx(0.0, abs=1e-4)

    def test_point_mass_of_identity_at_c4(self):
        """Atom 1 − 2/c from the closed-form transform."""
        from commlsd.identity_lsd import stieltjes

        result = invert_point_mass(lambda z: stieltjes(z, 4.0), 0.0)
        assert result.value == pytest.approx(0.5, abs=1e-5)

    def test_interval_mass(self):
        """Cauchy mass of [−1, 1] is 1/2."""
        result = cdf_interval(cauchy_transform, -1.0, 1.0, kernel=KernelTag.HERMITIAN)
        assert result.value == pytest.approx(0.5, abs=1e-5)
        assert result.converged

    def test_full_mass_of_identity_lsd(self):
        """c = 1 puts all mass in [−U, U]."""
        from commlsd.identity_lsd import stieltjes, support

        upper = support(1.0).U
        result = cdf_interval(lambda z: stieltjes(z, 1.0), -upper, upper)
        assert result.value == pytest.approx(1.0, abs=1e-3)

    def test_empty_interval(self):
        """[a, a] has no mass; a > b is an error."""
        assert cdf_interval(cauchy_transform, 1.0, 1.0).value == 0.0
        with pytest.raises(DomainError):
            cdf_interval(cauchy_transform, 1.0, 0.0)


class TestStepCdf:
    """Tests for empirical CDFs."""

    def test_from_samples_merges_ties(self):
        """Repeated values form one jump."""
        F = StepCdf.from_samples([1.0, 0.0, 0.0, 2.0])
        np.testing.assert_array_equal(F.jumps, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(F.cumulative, [0.5, 0.75, 1.0])

    def test_right_continuity(self):
        """F(x) includes the jump at x, F(x−) excludes it."""
        F = StepCdf.from_samples([1.0, 0.0, 0.0, 2.0])
        assert F.value(0.0) == 0.5
        assert F.left(0.0) == 0.0
        assert F.step_at(0.0) == 0.5
        assert F.value(-1.0) == 0.0
        assert F.value(5.0) == 1.0

    def test_must_end_at_one(self):
        """The last cumulative value is 1."""
        with pytest.raises(DomainError):
            StepCdf([0.0, 1.0], [0.5, 0.9])


class TestCurveCdf:
    """Tests for the CDF of a tabulated LSD."""

    def test_atom_is_a_jump(self):
        """For c = 4 the CDF jumps by 1/2 at 0."""
        G = CurveCdf.from_curve(closed_form_curve(4.0))
        assert G.value(0.0) - G.left(0.0) == pytest.approx(0.5)
        assert G.value(-100.0) == 0.0
        assert G.value(100.0) == pytest.approx(1.0)

    def test_median_of_symmetric_curve(self):
        """The c = 1 law is symmetric around 0."""
        G = CurveCdf.from_curve(closed_form_curve(1.0))
        assert G.value(0.0) == pytest.approx(0.5, abs=1e-12)
        assert G.quantile(0.5) == pytest.approx(0.0, abs=1e-8)

    def test_quantile_inside_atom(self):
        """Levels covered by the atom map to 0."""
        G = CurveCdf.from_curve(closed_form_curve(4.0))
        assert G.quantile(0.4) == 0.0
        assert G.quantile(0.6) == 0.0

    def test_quantile_inverts_value(self):
        """G(G⁻¹(u)) = u off the atom."""
        G = CurveCdf.from_curve(closed_form_curve(4.0))
        for u in (0.1, 0.2, 0.8, 0.9):
            assert G.value(G.quantile(u)) == pytest.approx(u, abs=1e-9)


class TestKsAndLevy:
    """Tests for the uniform and Lévy distances."""

    def test_identical(self):
        """Equal CDFs are at distance 0."""
        F = StepCdf.from_samples([0.0, 1.0, 2.0])
        assert ks_and_levy(F, F) == (0.0, 0.0)

    def test_shifted_step(self):
        """Unit steps at 0 and 0.5: KS 1, Lévy 1/2."""
        ks, levy = ks_and_levy(StepCdf([0.0], [1.0]), StepCdf([0.5], [1.0]))
        assert ks == 1.0
        assert levy == pytest.approx(0.5, abs=1e-9)

    def test_steps_one_apart(self):
        """Unit steps at 0 and 1 are at Lévy distance 1."""
        ks, levy = ks_and_levy(StepCdf([0.0], [1.0]), StepCdf([1.0], [1.0]))
        assert ks == 1.0
        assert levy == pytest.approx(1.0, abs=1e-9)

    def test_levy_below_ks(self):
        """0 ≤ Lévy ≤ KS ≤ 1 and KS is symmetric."""
        rng = np.random.default_rng(1)
        F = StepCdf.from_samples(rng.standard_normal(200))
        G = StepCdf.from_samples(rng.standard_normal(300) + 0.2)
        ks, levy = ks_and_levy(F, G)
        assert 0.0 < levy <= ks <= 1.0
        assert ks_and_levy(G, F)[0] == pytest.approx(ks)

    def test_levy_below_ks_many_pairs(self):
        """The inequality holds on many small random pairs."""
        rng = np.random.default_rng(11)
        for _ in range(1000):
            F = StepCdf.from_samples(rng.uniform(-1, 1, rng.integers(1, 8)))
            G = StepCdf.from_samples(rng.uniform(-1, 1, rng.integers(1, 8)))
            ks, levy = ks_and_levy(F, G)
            assert 0.0 <= levy <= ks + 1e-12

    def test_quantile_sample_against_curve(self):
        """Midpoint quantiles are within 1/p of the curve in KS."""
        G = CurveCdf.from_curve(closed_form_curve(1.0, GridSpec(2001)))
        p = 1000
        F = StepCdf.from_samples(G.quantile((np.arange(p) + 0.5) / p))
        ks, levy = ks_and_levy(F, G)
        assert ks <= 1 / p + 1e-9
        assert levy <= ks
