"""
Tests for empirical log-MGFs, Legendre transforms and the Gaussian closed forms.
"""

import math

import numpy as np
import pytest

from scoretest.errors import InputError, NumericError
from scoretest.models.gaussian import GaussianParams
from scoretest.schemas import ChainConfig
from scoretest.services.exponent_service import (
    exponent_curve,
    gaussian_exact_errors,
    gaussian_lrt_exact_errors,
    gaussian_lrt_exponents,
    gaussian_published_type1_exponent,
    gaussian_threshold_range,
    gaussian_type1_exponent,
    gaussian_type2_exponent,
    legendre_transform,
    log_mgf_empirical,
    log_mgf_gradient,
    threshold_range,
    type1_exponent_empirical,
    type2_exponent_empirical,
)
from scoretest.services.sampler_service import hmc_chain, sample_gaussian_exact
from scoretest.services.score_service import score_differences

SHIFT = np.array([1.0, 0.0])


def _rademacher_conjugate(t: float) -> float:
    """sup_θ θt - log cosh θ = t atanh t + ½ log(1 - t²)."""
    return t * math.atanh(t) + 0.5 * math.log(1.0 - t * t)


class TestLogMgf:
    def test_zero_at_origin(self, rng):
        assert log_mgf_empirical(rng.standard_normal(100), 0.0) == 0.0

    def test_constant_sample(self):
        assert log_mgf_empirical(np.full(10, 0.3), 2.0) == pytest.approx(0.6, abs=1e-14)

    def test_rademacher(self):
        assert log_mgf_empirical(np.array([-1.0, 1.0]), 1.0) == pytest.approx(0.433781, abs=1e-6)

    def test_vectorised_over_theta(self, rng):
        D = rng.standard_normal(50)
        thetas = np.array([0.0, 0.5, 1.0])
        values = log_mgf_empirical(D, thetas)
        assert values.shape == (3,)
        assert values[0] == 0.0
        assert values[2] == pytest.approx(log_mgf_empirical(D, 1.0))

    def test_shift_covariance(self, rng):
        D = rng.standard_normal(200)
        for theta in (0.3, 1.0, 2.5):
            shifted = log_mgf_empirical(D + 0.7, theta)
            assert shifted == pytest.approx(log_mgf_empirical(D, theta) + 0.7 * theta, abs=1e-10)

    def test_convex_on_grid(self, rng):
        values = log_mgf_empirical(rng.standard_normal(300), np.linspace(-3, 3, 601))
        assert np.all(np.diff(values, 2) >= -1e-9)

    def test_gradient_at_zero_is_mean(self, rng):
        D = rng.standard_normal(100)
        assert log_mgf_gradient(D, 0.0) == pytest.approx(D.mean(), abs=1e-12)

    def test_empty_sample(self):
        with pytest.raises(InputError):
            log_mgf_empirical(np.array([]), 1.0)

    def test_non_finite_theta(self):
        with pytest.raises(InputError):
            log_mgf_empirical(np.array([1.0, 2.0]), np.inf)


class TestLegendreTransform:
    def test_quadratic_conjugate(self):
        result = legendre_transform(lambda t: 0.5 * t * t, 1.0)
        assert result.theta_star == pytest.approx(1.0, abs=1e-6)
        assert result.exponent == pytest.approx(0.5, abs=1e-10)
        assert not result.unbounded

    def test_rademacher_conjugate(self):
        D = np.array([-1.0, 1.0])
        result = legendre_transform(lambda t: log_mgf_empirical(D, t), 0.5)
        assert result.theta_star == pytest.approx(math.atanh(0.5), abs=1e-6)
        assert result.exponent == pytest.approx(_rademacher_conjugate(0.5), abs=1e-10)

    def test_below_slope_at_zero(self):
        result = legendre_transform(lambda t: 0.5 * t * t + 0.2 * t, 0.1, phi_prime0=0.2)
        assert result.theta_star == 0.0
        assert result.exponent == 0.0

    def test_below_slope_without_hint(self):
        result = legendre_transform(lambda t: 0.5 * t * t + 0.2 * t, 0.1)
        assert result.theta_star == 0.0
        assert result.exponent == 0.0

    def test_grid_oracle(self):
        rng = np.random.default_rng(2024)
        thetas = np.linspace(0.0, 10.0, 100_001)
        for _ in range(20):
            D = rng.standard_normal(50) * rng.uniform(0.5, 1.5) + rng.uniform(-1, 1)
            T = D.mean() + rng.uniform(0.05, 0.5) * D.std()
            result = type1_exponent_empirical(D, T)
            assert result.theta_star < 10.0
            grid = np.max(thetas * T - log_mgf_empirical(D, thetas))
            assert result.exponent == pytest.approx(grid, abs=1e-6)
            assert result.exponent >= grid - 1e-12

    def test_beyond_support_is_unbounded(self):
        D = np.array([-1.0, 1.0])
        result = legendre_transform(lambda t: log_mgf_empirical(D, t), 2.0)
        assert result.unbounded
        assert math.isfinite(result.exponent)
        assert result.exponent > 1e5

    def test_phi_must_vanish_at_zero(self):
        with pytest.raises(InputError):
            legendre_transform(lambda t: t + 1.0, 1.0)

    def test_bad_bracket(self):
        with pytest.raises(InputError):
            legendre_transform(lambda t: t * t, 1.0, theta_max=0.0)

    def test_non_finite_phi_reports_theta(self):
        def phi(t):
            return math.inf if t > 1.0 else t * t

        with pytest.raises(NumericError) as err:
            legendre_transform(phi, 10.0)
        assert err.value.location > 1.0


class TestEmpiricalExponents:
    def test_below_mean_is_zero(self, rng):
        D = rng.standard_normal(1000)
        assert type1_exponent_empirical(D, D.mean() - 0.1).exponent == 0.0

    def test_type2_above_negated_mean_is_zero(self, rng):
        D = rng.standard_normal(1000) + 0.5
        assert type2_exponent_empirical(D, -D.mean() + 0.1).exponent == 0.0

    def test_gaussian_monte_carlo(self, gaussian_pair, gaussian_null):
        null, alt = gaussian_pair
        X = sample_gaussian_exact(gaussian_null, 1_000_000, seed=11)
        result = type1_exponent_empirical(score_differences(null.model, alt.model, X), 0.0)
        assert result.m == 1_000_000
        assert result.exponent == pytest.approx(0.125, abs=0.005)

    def test_doubling_diffs_and_threshold(self, rng):
        D = rng.standard_normal(500)
        base = type1_exponent_empirical(D, 0.5)
        doubled = type1_exponent_empirical(2.0 * D, 1.0)
        assert doubled.exponent == pytest.approx(base.exponent, abs=1e-9)
        assert doubled.theta_star == pytest.approx(base.theta_star / 2.0, abs=1e-6)

    def test_type2_is_mirrored_type1(self, rng):
        D = rng.standard_normal(500) - 0.4
        for T in (-0.3, 0.0, 0.2):
            mirrored = type1_exponent_empirical(D, -T)
            result = type2_exponent_empirical(D, T)
            assert result.exponent == mirrored.exponent
            assert result.T == T
            assert result.error_kind == "type2"

    def test_nondecreasing_in_threshold(self, rng):
        D = rng.standard_normal(2000)
        values = [type1_exponent_empirical(D, T).exponent for T in np.linspace(D.mean(), D.mean() + 1.5, 16)]
        assert np.all(np.diff(values) >= -1e-9)

    def test_curve_columns(self, rng):
        null_diffs = rng.standard_normal(200) - 0.5
        alt_diffs = rng.standard_normal(200) - 0.5
        frame = exponent_curve(null_diffs, alt_diffs, [-0.25, 0.0, 0.25])
        assert list(frame.columns) == ["T", "type1_exponent", "type2_exponent", "theta1", "theta2", "unbounded"]
        assert frame["type1_exponent"].is_monotonic_increasing
        assert frame["type2_exponent"].is_monotonic_decreasing

    def test_report_fields(self, rng):
        report = type1_exponent_empirical(rng.standard_normal(10), 1.0).to_report()
        assert set(report.model_dump()) == {"error_kind", "T", "theta_star", "exponent", "unbounded", "m"}


class TestThresholdRange:
    def test_identical_models(self):
        interval = threshold_range(np.zeros(10), np.zeros(10))
        assert (interval.lo, interval.hi, interval.degenerate) == (0.0, 0.0, True)

    def test_gaussian_closed_form(self, gaussian_null):
        interval = gaussian_threshold_range(gaussian_null, SHIFT)
        assert (interval.lo, interval.hi) == (-0.5, 0.5)
        assert not interval.degenerate
        assert interval.midpoint == 0.0

    def test_gaussian_samples(self, gaussian_pair, gaussian_null, gaussian_alt):
        null, alt = gaussian_pair
        D = score_differences(null.model, alt.model, sample_gaussian_exact(gaussian_null, 100_000, seed=0))
        D_alt = score_differences(alt.model, null.model, sample_gaussian_exact(gaussian_alt, 100_000, seed=1))
        interval = threshold_range(D, D_alt)
        assert interval.lo == pytest.approx(-0.5, abs=0.02)
        assert interval.hi == pytest.approx(0.5, abs=0.02)
        for T in (-0.25, 0.0, 0.25):
            assert interval.contains(T)
            assert type1_exponent_empirical(D, T).exponent > 0
            assert type2_exponent_empirical(D_alt, T).exponent > 0

    def test_quartic_signs(self, quartic_pair):
        null, alt = quartic_pair
        cfg = ChainConfig(burn_in=200, step_size=0.15, path_length=10, n_chains=20, seed=5)
        X0 = hmc_chain(null.model, np.zeros(2), cfg, 20_000).samples
        X1 = hmc_chain(alt.model, np.zeros(2), cfg.model_copy(update={"seed": 6}), 20_000).samples
        interval = threshold_range(score_differences(null.model, alt.model, X0), score_differences(alt.model, null.model, X1))
        assert interval.lo < 0 < interval.hi


class TestGaussianClosedForms:
    """N(0, I) vs N((1, 0), I): a = 0.5, v = 1."""

    @pytest.mark.parametrize("T, expected", [(0.0, 0.125), (0.5, 0.5), (-0.5, 0.0), (-1.0, 0.0)])
    def test_type1(self, gaussian_null, T, expected):
        assert gaussian_type1_exponent(gaussian_null, SHIFT, T) == pytest.approx(expected)

    @pytest.mark.parametrize("T, expected", [(0.0, 0.125), (-0.5, 0.5), (0.5, 0.0)])
    def test_type2(self, gaussian_null, T, expected):
        assert gaussian_type2_exponent(gaussian_null, SHIFT, T) == pytest.approx(expected)

    def test_published_convention(self, gaussian_null):
        assert gaussian_published_type1_exponent(gaussian_null, SHIFT, 1.0) == pytest.approx(9 / 8)
        assert gaussian_type1_exponent(gaussian_null, SHIFT, 1.0, convention="published") == pytest.approx(9 / 8)
        assert gaussian_published_type1_exponent(gaussian_null, SHIFT, 0.0) == 0.0

    def test_unknown_convention(self, gaussian_null):
        with pytest.raises(InputError):
            gaussian_type1_exponent(gaussian_null, SHIFT, 0.0, convention="other")

    def test_type2_mirrors_type1_with_negated_shift(self):
        params = GaussianParams(mean=np.zeros(2), cov=np.array([[1.0, 0.3], [0.3, 2.0]]))
        mu = np.array([0.4, -0.7])
        for T in np.linspace(-0.3, 0.3, 7):
            assert gaussian_type2_exponent(params, mu, T) == pytest.approx(
                gaussian_type1_exponent(params, -mu, -T), abs=1e-12
            )

    def test_zero_shift(self, gaussian_null):
        assert gaussian_type1_exponent(gaussian_null, np.zeros(2), 0.0) == 0.0
        assert gaussian_type1_exponent(gaussian_null, np.zeros(2), 0.1) == math.inf
        assert gaussian_threshold_range(gaussian_null, np.zeros(2)).degenerate

    def test_shift_shape(self, gaussian_null):
        with pytest.raises(InputError):
            gaussian_type1_exponent(gaussian_null, np.zeros(3), 0.0)

    @pytest.mark.parametrize("T", [-0.25, 0.0, 0.25])
    def test_chernoff_bound(self, gaussian_null, T):
        exponent = gaussian_type1_exponent(gaussian_null, SHIFT, T)
        for n in range(1, 129):
            alpha, _ = gaussian_exact_errors(gaussian_null, SHIFT, T, n)
            assert alpha <= math.exp(-n * exponent)

    def test_exact_errors_log_option(self, gaussian_null):
        alpha, beta = gaussian_exact_errors(gaussian_null, SHIFT, 0.0, 16)
        log_alpha, log_beta = gaussian_exact_errors(gaussian_null, SHIFT, 0.0, 16, log=True)
        assert log_alpha == pytest.approx(math.log(alpha))
        assert log_beta == pytest.approx(math.log(beta))

    def test_exact_errors_converge_to_exponent(self, gaussian_null):
        log_alpha, _ = gaussian_exact_errors(gaussian_null, SHIFT, 0.0, 10_000, log=True)
        assert -log_alpha / 10_000 == pytest.approx(0.125, abs=1e-3)

    def test_lrt(self, gaussian_null):
        assert gaussian_lrt_exponents(gaussian_null, SHIFT, 0.0) == pytest.approx((0.125, 0.125))
        alpha, beta = gaussian_lrt_exact_errors(gaussian_null, SHIFT, 0.0, 1)
        assert alpha == pytest.approx(beta)
