import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from mixep import EPParams, ep_density, ep_log_density, ep_sample, log_gamma, unit_variance_eta
from mixep.simgen import rng_for_seed

# Extended-precision evaluation of the closed form (mpmath, 50 digits),
# cross-checked against quadrature normalization.
LOGPDF_1_3 = -1.866175280398675


def quad_normalization(params):
    half, _ = integrate.quad(lambda e: ep_density(e, params), 0.0, np.inf, limit=400)
    return 2.0 * half


def ep_cdf(t, params):
    # 0.5 * (1 + sign(t) * P(1/p, eta |t|^p)); validated against quadrature below
    t = np.asarray(t, dtype=float)
    tail = special.gammainc(1.0 / params.p, params.eta * np.abs(t) ** params.p)
    return 0.5 * (1.0 + np.sign(t) * tail)


class TestParams:
    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            EPParams(p=0.0, eta=1.0)
        with pytest.raises(ValueError):
            EPParams(p=-1.0, eta=1.0)

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            EPParams(p=1.0, eta=0.0)
        with pytest.raises(ValueError):
            EPParams(p=1.0, eta=np.inf)


class TestLogGamma:
    def test_known_values(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
        assert log_gamma(0.5) == pytest.approx(0.5 * np.log(np.pi), rel=1e-14)
        assert log_gamma(5.0) == pytest.approx(np.log(24.0), rel=1e-14)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            log_gamma(0.0)
        with pytest.raises(ValueError):
            log_gamma(-3.0)

    def test_relative_error_against_mpmath(self):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 40
        xs = np.geomspace(1e-3, 1e3, 97)
        for x in xs:
            exact = float(mpmath.loggamma(mpmath.mpf(repr(float(x)))))
            got = log_gamma(x)
            if abs(exact) > 1e-10:
                assert abs(got - exact) <= 1e-12 * abs(exact)
            else:
                assert abs(got - exact) <= 1e-13


class TestLogDensity:
    def test_standard_normal_mode(self):
        # p=2, eta=1/2 is the standard normal
        assert ep_log_density(0.0, EPParams(2.0, 0.5)) == pytest.approx(
            -0.5 * np.log(2 * np.pi), abs=1e-12)

    def test_laplace_mode(self):
        assert ep_log_density(0.0, EPParams(1.0, 1.0)) == pytest.approx(
            np.log(0.5), abs=1e-12)

    def test_frozen_oracle_value(self):
        assert ep_log_density(1.3, EPParams(1.5, 0.7)) == pytest.approx(
            LOGPDF_1_3, abs=1e-12)

    @pytest.mark.parametrize("eta", [0.3, 0.5, 2.0])
    def test_matches_normal_pointwise(self, eta):
        # at p=2, EP(2, eta) is normal with variance 1/(2 eta)
        sigma2 = 1.0 / (2.0 * eta)
        es = np.linspace(-8, 8, 33)
        expected = -0.5 * np.log(2 * np.pi * sigma2) - es**2 / (2 * sigma2)
        got = ep_log_density(es, EPParams(2.0, eta))
        np.testing.assert_allclose(got, expected, atol=1e-12)

    @pytest.mark.parametrize("eta", [0.5, 1.0, 4.0])
    def test_matches_laplace_pointwise(self, eta):
        es = np.linspace(-8, 8, 33)
        expected = np.log(eta / 2.0) - eta * np.abs(es)
        got = ep_log_density(es, EPParams(1.0, eta))
        np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_finite_for_large_arguments(self):
        assert np.isfinite(ep_log_density(1e8, EPParams(2.0, 1.0)))


class TestDensity:
    def test_mode_heights(self):
        assert ep_density(0.0, EPParams(1.0, 1.0)) == pytest.approx(0.5, abs=1e-14)
        assert ep_density(0.0, EPParams(2.0, 0.5)) == pytest.approx(
            1.0 / np.sqrt(2 * np.pi), abs=1e-14)

    @given(e=st.floats(-50, 50), p=st.sampled_from([0.5, 1.0, 1.7, 2.0, 3.0]),
           eta=st.sampled_from([0.1, 1.0, 10.0]))
    @settings(max_examples=200, deadline=None)
    def test_nonnegative_and_symmetric(self, e, p, eta):
        params = EPParams(p, eta)
        assert ep_density(e, params) >= 0.0
        assert ep_density(e, params) == ep_density(-e, params)

    @pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 2.0, 3.0])
    @pytest.mark.parametrize("eta", [0.1, 1.0, 10.0])
    def test_normalization(self, p, eta):
        assert quad_normalization(EPParams(p, eta)) == pytest.approx(1.0, abs=1e-8)


class TestSampler:
    def test_standard_normal_variance(self):
        draws = ep_sample(EPParams(2.0, 0.5), 100_000, rng_for_seed(101))
        assert 0.97 <= draws.var() <= 1.03

    def test_laplace_mean_magnitude(self):
        draws = ep_sample(EPParams(1.0, 1.0), 100_000, rng_for_seed(102))
        assert 0.97 <= np.mean(np.abs(draws)) <= 1.03

    def test_deterministic_given_seed(self):
        a = ep_sample(EPParams(1.5, 0.7), 1000, rng_for_seed(7))
        b = ep_sample(EPParams(1.5, 0.7), 1000, rng_for_seed(7))
        np.testing.assert_array_equal(a, b)

    def test_count_validation(self):
        with pytest.raises(ValueError):
            ep_sample(EPParams(1.0, 1.0), 0, rng_for_seed(0))

    def test_ks_against_quadrature_validated_cdf(self):
        # spot-check two grid points here; the full grid runs in acceptance
        for p, eta in [(1.5, 0.7), (0.5, 1.0)]:
            params = EPParams(p, eta)
            for t in (-2.0, -0.3, 0.0, 0.4, 1.7):
                by_quad = 0.5 + np.sign(t) * integrate.quad(
                    lambda e: ep_density(e, params), 0.0, abs(t))[0]
                assert ep_cdf(t, params) == pytest.approx(by_quad, abs=1e-10)
            draws = ep_sample(params, 100_000, rng_for_seed(103))
            stat = stats.kstest(draws, lambda t: ep_cdf(t, params)).statistic
            crit = np.sqrt(-np.log(0.0005) / 2.0) / np.sqrt(draws.size)
            assert stat < crit


class TestUnitVarianceEta:
    def test_gaussian_case(self):
        assert unit_variance_eta(2.0) == pytest.approx(0.5, abs=1e-14)

    @pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 2.0])
    def test_sampled_variance_is_one(self, p):
        params = EPParams(p, unit_variance_eta(p))
        draws = ep_sample(params, 200_000, rng_for_seed(104))
        assert draws.var() == pytest.approx(1.0, abs=0.05)
