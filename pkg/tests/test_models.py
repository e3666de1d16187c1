import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from holecov.errors import DifferentiabilityError, DomainError, NoSpectralDensityError
from holecov.models import (
    Cauchy,
    CardinalSine,
    Gaussian,
    GaussHypergeometric,
    Matern,
    family_traits,
    hankel_spectral_oracle,
    phi,
    phi_d2,
    phi_normalized,
    spectral_density,
)

SMOOTH = [Matern(1.5), Matern(2.5), Matern(1.2), Cauchy(0.5), Cauchy(2.0), Gaussian(), CardinalSine(),
          GaussHypergeometric(3, 3.5, 6, dim=2)]
ALL = SMOOTH + [Matern(0.5), Matern(1.0), GaussHypergeometric(3, 3.5, 6, dim=4)]


def central_diff(f, t, h):
    return (f(t + h) - f(t - h)) / (2 * h)


def central_diff2(f, t, h):
    return (f(t + h) - 2 * f(t) + f(t - h)) / (h * h)


class TestProfiles:
    def test_exponential(self):
        t = np.linspace(0, 10, 101)
        np.testing.assert_allclose(Matern(0.5).phi(t), np.exp(-t), rtol=1e-13)
        assert Matern(0.5).phi(1.0) == pytest.approx(0.367879, abs=1e-6)

    def test_matern_three_halves(self):
        t = np.linspace(0, 10, 101)
        np.testing.assert_allclose(Matern(1.5).phi(t), (1 + t) * np.exp(-t), rtol=1e-12)
        np.testing.assert_allclose(Matern(1.5).d2(t[1:]), (t[1:] - 1) * np.exp(-t[1:]), atol=1e-13)
        assert Matern(1.5).d2(1.0) == pytest.approx(0.0, abs=1e-14)

    def test_matern_integer_order_against_bessel(self):
        t = np.array([0.2, 1.0, 4.0])
        np.testing.assert_allclose(Matern(1.0).phi(t), t * special.k1(t), rtol=1e-13)

    def test_cauchy(self):
        assert Cauchy(1.0).phi(1.0) == pytest.approx(0.5)
        assert Cauchy(2.0).phi(2.0) == pytest.approx(1 / 25)

    def test_wave(self):
        assert CardinalSine().phi(math.pi) == pytest.approx(0.0, abs=1e-16)
        assert CardinalSine().phi(0.0) == 1.0
        assert CardinalSine().d1(0.0) == 0.0

    def test_hypergeometric_support(self):
        h = GaussHypergeometric(3, 3.5, 6)
        assert np.all(h.phi(np.array([1.0, 1.5, 10.0])) == 0.0)
        assert h.phi(0.0) > 0
        assert h.phi_normalized(0.0) == pytest.approx(1.0)
        assert phi_normalized(h, 0.5) == pytest.approx(h.phi(0.5) / h.phi(0.0))

    @pytest.mark.parametrize("fam", [Matern(0.5), Matern(1.5), Cauchy(0.3), Gaussian()])
    def test_bounded_by_one(self, fam):
        t = np.linspace(0, 100, 2001)
        assert np.all(np.abs(fam.phi(t)) <= 1.0)

    def test_wave_lower_bound(self):
        t = np.linspace(0, 100, 100001)
        assert CardinalSine().phi(t).min() >= -0.2173

    def test_accessors(self):
        assert phi(Cauchy(1.0), 1.0) == 0.5
        assert phi_d2(CardinalSine(), 0.0) == pytest.approx(-1 / 3)

    @pytest.mark.parametrize("bad", [lambda: Matern(0.0), lambda: Cauchy(-1.0),
                                     lambda: GaussHypergeometric(0.5, 3.5, 6)])
    def test_invalid_parameters(self, bad):
        with pytest.raises(DomainError):
            bad()


class TestDerivatives:
    @pytest.mark.parametrize("fam", SMOOTH, ids=repr)
    @pytest.mark.parametrize("t", [0.05, 0.3, 0.9, 2.0, 6.0])
    def test_first_derivative(self, fam, t):
        if isinstance(fam, GaussHypergeometric) and t >= 1:
            t = 0.6
        exact = fam.d1(t)
        errs = [abs(central_diff(fam.phi, t, h) - exact) for h in (1e-3, 1e-4, 1e-5)]
        assert min(errs) <= 1e-6 * max(abs(exact), 1e-3)

    @pytest.mark.parametrize("fam", SMOOTH, ids=repr)
    @pytest.mark.parametrize("t", [0.05, 0.3, 0.9, 2.0, 6.0])
    def test_second_derivative(self, fam, t):
        if isinstance(fam, GaussHypergeometric) and t >= 1:
            t = 0.6
        exact = fam.d2(t)
        errs = [abs(central_diff(fam.d1, t, h) - exact) for h in (1e-3, 1e-4, 1e-5)]
        assert min(errs) <= 1e-6 * max(abs(exact), 1e-3)

    @pytest.mark.parametrize("fam", SMOOTH, ids=repr)
    def test_d1_over_t_limit(self, fam):
        assert fam.d1_over_t(0.0) == pytest.approx(fam.d2(0.0), rel=1e-12)
        assert fam.d1_over_t(1e-8) == pytest.approx(fam.d2(0.0), rel=1e-2)
        assert fam.d1_over_t(0.37) == pytest.approx(fam.d1(0.37) / 0.37, rel=1e-12)

    @pytest.mark.parametrize("fam, expected", [
        (CardinalSine(), -1 / 3),
        (Cauchy(0.7), -1.4),
        (Gaussian(), -2.0),
        (Matern(1.5), -1.0),
        (Matern(2.5), -1 / 3),
    ], ids=repr)
    def test_second_derivative_at_origin(self, fam, expected):
        assert fam.d2(0.0) == pytest.approx(expected, rel=1e-12)
        assert 2 * (fam.phi(1e-4) - fam.phi(0.0)) / 1e-8 == pytest.approx(expected, rel=1e-3)

    @pytest.mark.parametrize("fam", [Matern(0.5), Matern(1.0), GaussHypergeometric(3, 3.5, 6, dim=4)], ids=repr)
    def test_not_twice_differentiable(self, fam):
        assert not fam.twice_differentiable()
        with pytest.raises(DifferentiabilityError):
            fam.d2(0.0)

    def test_matern_d2_near_one(self):
        # nu slightly above 1: phi''(0) = -1/(2(nu-1)) is large but finite
        assert Matern(1.05).d2(0.0) == pytest.approx(-10.0, rel=1e-12)


class TestSpectralDensity:
    def test_matern_at_zero(self):
        for nu in (0.5, 1.5):
            for d in (1, 2, 3):
                expected = special.gamma(nu + d / 2) / (special.gamma(nu) * math.pi ** (d / 2))
                assert Matern(nu).spectral_density(d, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_cauchy_one_dimensional_pair(self):
        w = np.array([0.1, 1.0, 3.0])
        # (2 pi)^-1 int exp(-iwh) / (1 + h^2) dh = exp(-|w|) / 2
        np.testing.assert_allclose(Cauchy(1.0).spectral_density(1, w), 0.5 * np.exp(-w), rtol=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_gaussian_self_transform(self, d):
        w = np.linspace(0, 8, 17)
        np.testing.assert_allclose(Gaussian().spectral_density(d, w),
                                   (4 * math.pi) ** (-d / 2) * np.exp(-w * w / 4), rtol=1e-13)

    def test_wave_support(self):
        w = np.array([1.0 + 1e-9, 1.5, 10.0])
        assert np.all(CardinalSine().spectral_density(2, w) == 0.0)
        assert np.all(CardinalSine().spectral_density(1, w) == 0.0)
        assert CardinalSine().spectral_density(1, 0.5) == pytest.approx(0.5)

    def test_wave_no_density_in_3d(self):
        with pytest.raises(NoSpectralDensityError):
            CardinalSine().spectral_density(3, 0.5)

    def test_cauchy_density_requires_delta(self):
        assert not Cauchy(0.2).has_spectral_density_in(2)
        with pytest.raises(NoSpectralDensityError):
            Cauchy(0.2).spectral_density(2, 1.0)

    @pytest.mark.parametrize("fam, d", [(Matern(0.5), 1), (Matern(1.5), 2), (Cauchy(2.0), 2),
                                        (Gaussian(), 3), (CardinalSine(), 1)], ids=repr)
    def test_total_mass_is_variance(self, fam, d):
        # int_{R^d} f = phi(0): the inverse transform at the origin.
        area = 2 * math.pi ** (d / 2) / special.gamma(d / 2)
        mass, _ = integrate.quad(lambda w: area * w ** (d - 1) * fam.spectral_density(d, w), 0, np.inf,
                                 limit=400)
        assert mass == pytest.approx(1.0, rel=1e-7)

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    @pytest.mark.parametrize("fam, d", [(Matern(1.0), 2), (Cauchy(1.0), 2), (Gaussian(), 2),
                                        (GaussHypergeometric(3, 3.5, 6, dim=2), 2)], ids=repr)
    def test_matches_oracle(self, fam, d):
        trunc = 1.0 if isinstance(fam, GaussHypergeometric) else None
        for w in (0.01, 0.7, 3.0, 11.0):
            ref = hankel_spectral_oracle(fam.phi, d, w, truncation=trunc)
            assert fam.spectral_density(d, w) == pytest.approx(ref, rel=1e-6)

    def test_hypergeometric_lower_dimension_by_quadrature(self):
        h = GaussHypergeometric(3, 3.5, 6, dim=4)
        f = h.spectral_density(2, np.array([0.0, 2.0, 8.0]))
        assert np.all(np.diff(f) < 0)

    @pytest.mark.parametrize("fam", [Matern(0.5), Matern(2.5), Cauchy(1.0), Cauchy(3.0), Gaussian()], ids=repr)
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_nonincreasing_and_nonnegative(self, fam, d):
        w = np.logspace(-3, 2, 200)
        f = fam.spectral_density(d, w)
        assert np.all(f >= 0)
        assert np.all(np.diff(f) <= 1e-12)

    def test_hypergeometric_dim2_density_oscillates(self):
        # Same parameters normalized for R^2 are not in Phi_4: f_2 is not monotone.
        f = GaussHypergeometric(3, 3.5, 6, dim=2).spectral_density(2, np.linspace(8, 20, 60))
        assert np.any(np.diff(f) > 0)
        assert np.all(f >= -1e-15)

    def test_hypergeometric_rejects_higher_dimension(self):
        with pytest.raises(NoSpectralDensityError):
            GaussHypergeometric(3, 3.5, 6, dim=2).spectral_density(3, 1.0)

    def test_accessor(self):
        assert spectral_density(Gaussian(), 1, 0.0) == pytest.approx((4 * math.pi) ** -0.5)


class TestTraits:
    @pytest.mark.parametrize("fam, d, twice, nonincr", [
        (Matern(1.5), 2, True, True),
        (Matern(1.0), 2, False, True),
        (Cauchy(1.0), 3, True, True),
        (Gaussian(), 2, True, True),
        (CardinalSine(), 1, True, True),
        (CardinalSine(), 2, True, False),
        (GaussHypergeometric(3, 3.5, 6, dim=2), 2, True, False),
        (GaussHypergeometric(3, 3.5, 6, dim=4), 2, False, True),
    ], ids=repr)
    def test_table(self, fam, d, twice, nonincr):
        t = family_traits(fam, d)
        assert t.valid
        assert t.twice_differentiable_at_origin is twice
        assert t.spectral_density_nonincreasing is nonincr

    def test_wave_validity(self):
        assert CardinalSine().valid_in(3)
        assert not CardinalSine().valid_in(4)

    def test_hypergeometric_validity(self):
        assert GaussHypergeometric(3, 3.5, 6, dim=2).valid_in(2)
        assert not GaussHypergeometric(3, 3.5, 6, dim=2).valid_in(3)


@given(nu=st.floats(0.2, 6.0), t=st.floats(0.0, 50.0))
@settings(max_examples=80, deadline=None)
def test_matern_positive_and_bounded(nu, t):
    v = Matern(nu).phi(t)
    assert 0.0 <= v <= 1.0


@given(t=st.floats(1e-3, 30.0))
@settings(max_examples=60, deadline=None)
def test_wave_derivative_identity(t):
    # (sin t / t)' = (t cos t - sin t) / t^2
    assert CardinalSine().d1(t) == pytest.approx((t * math.cos(t) - math.sin(t)) / t**2, abs=1e-12)
