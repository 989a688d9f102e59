"""
Tests for the exact, MALA, HMC and Gibbs samplers.
"""

import numpy as np
import pytest

from scoretest.config import TUNE_STEP_MAX, TUNE_STEP_MIN
from scoretest.errors import InputError, NumericError
from scoretest.models import build_model
from scoretest.models.base import ScoreModel
from scoretest.models.gaussian import GaussianParams
from scoretest.models.quartic import QuarticExpFamilyParams
from scoretest.schemas import ChainConfig
from scoretest.services.sampler_service import (
    draw_pool,
    hmc_chain,
    leapfrog,
    mala_chain,
    rbm_exact_mixture_moments,
    rbm_gibbs_chain,
    sample_gaussian_exact,
    sample_rbm_mixture,
    tune_step_size,
)


@pytest.fixture
def standard_normal_1d():
    return build_model(GaussianParams(mean=np.zeros(1), cov=np.eye(1)))


class TestExactSamplers:
    def test_gaussian_moments(self):
        params = GaussianParams(mean=np.array([1.0, -2.0]), cov=np.array([[2.0, 0.5], [0.5, 1.0]]))
        X = sample_gaussian_exact(params, 200_000, seed=0)
        np.testing.assert_allclose(X.mean(axis=0), params.mean, atol=0.02)
        np.testing.assert_allclose(np.cov(X.T), params.cov, atol=0.03)

    def test_gaussian_rejects_empty(self, gaussian_null):
        with pytest.raises(InputError):
            sample_gaussian_exact(gaussian_null, 0, seed=0)

    def test_rbm_mixture_moments(self, small_rbm):
        mean, cov = rbm_exact_mixture_moments(small_rbm)
        X = sample_rbm_mixture(small_rbm, 200_000, seed=1)
        np.testing.assert_allclose(X.mean(axis=0), mean, atol=0.02)
        np.testing.assert_allclose(np.cov(X.T), cov, atol=0.03)


class TestMala:
    def test_standard_normal_variance(self, standard_normal_1d):
        cfg = ChainConfig(burn_in=200, thinning=2, step_size=1.4, n_chains=100, seed=0)
        result = mala_chain(standard_normal_1d.model, np.zeros(1), cfg, 50_000)
        assert result.samples.shape == (50_000, 1)
        assert abs(result.samples.mean()) < 0.03
        assert abs(result.samples.var() - 1.0) < 0.05
        assert 0.0 < result.acceptance_rate < 1.0

    def test_tuned_step_hits_target_acceptance(self, standard_normal_1d):
        eps = tune_step_size(standard_normal_1d.model, np.zeros(1), "mala", seed=0)
        cfg = ChainConfig(burn_in=100, step_size=eps, n_chains=20, seed=1)
        result = mala_chain(standard_normal_1d.model, np.zeros(1), cfg, 10_000)
        assert 0.4 < result.acceptance_rate < 0.75

    @staticmethod
    def _nan_above_half():
        return ScoreModel(
            dim=1,
            grad_log_density=lambda X: np.where(X > 0.5, np.nan, -X),
            laplacian_log_density=lambda X: -np.ones(len(X)),
            unnorm_log_density=lambda X: -0.5 * np.sum(X * X, axis=1),
        )

    def test_non_finite_proposals_are_rejected(self):
        cfg = ChainConfig(burn_in=0, step_size=1.0, n_chains=10, seed=0)
        result = mala_chain(self._nan_above_half(), np.zeros(1), cfg, 1000)
        assert np.all(result.samples <= 0.5)
        assert result.divergences > 0

    def test_non_finite_gradient_at_chain_state(self):
        cfg = ChainConfig(burn_in=0, step_size=1.0, n_chains=10, seed=0)
        with pytest.raises(NumericError) as err:
            mala_chain(self._nan_above_half(), np.ones(1), cfg, 1000)
        assert err.value.location[0] == 1.0

    def test_tuner_stops_at_the_step_bounds(self):
        wide = build_model(GaussianParams(mean=np.zeros(1), cov=1e8 * np.eye(1))).model
        assert tune_step_size(wide, np.zeros(1), "mala", seed=0) == TUNE_STEP_MAX
        nowhere = ScoreModel(
            dim=1,
            grad_log_density=lambda X: np.where(X != 0.0, np.nan, -X),
            laplacian_log_density=lambda X: -np.ones(len(X)),
            unnorm_log_density=lambda X: -0.5 * np.sum(X * X, axis=1),
        )
        assert tune_step_size(nowhere, np.zeros(1), "mala", seed=0) == TUNE_STEP_MIN

    def test_bad_initial_state(self, standard_normal_1d):
        with pytest.raises(InputError):
            mala_chain(standard_normal_1d.model, np.zeros(2), ChainConfig(step_size=1.0), 10)

    def test_cannot_tune_gibbs(self, standard_normal_1d):
        with pytest.raises(InputError):
            tune_step_size(standard_normal_1d.model, np.zeros(1), "gibbs")


class TestHmc:
    def test_standard_normal_variance(self, standard_normal_1d):
        cfg = ChainConfig(burn_in=100, step_size=0.3, path_length=5, n_chains=50, seed=0)
        result = hmc_chain(standard_normal_1d.model, np.zeros(1), cfg, 20_000)
        assert abs(result.samples.mean()) < 0.03
        assert abs(result.samples.var() - 1.0) < 0.05
        assert result.acceptance_rate > 0.9
        assert result.divergences == 0

    def test_leapfrog_is_reversible(self, quartic_pair, rng):
        model = quartic_pair[0].model
        x, p = rng.standard_normal(2) * 0.5, rng.standard_normal(2)
        x1, p1 = leapfrog(model, x, p, 0.05, 20)
        x2, p2 = leapfrog(model, x1, -p1, 0.05, 20)
        np.testing.assert_allclose(x2, x, atol=1e-10)
        np.testing.assert_allclose(-p2, p, atol=1e-10)

    def test_leapfrog_nearly_conserves_energy(self, gaussian_pair, rng):
        model = gaussian_pair[0].model
        x, p = rng.standard_normal(2), rng.standard_normal(2)
        x1, p1 = leapfrog(model, x, p, 0.01, 100)
        h0 = -model.unnormalized(x) + 0.5 * p @ p
        h1 = -model.unnormalized(x1) + 0.5 * p1 @ p1
        assert abs(h1 - h0) < 1e-3

    def test_quartic_pool_is_symmetric(self, quartic_pair):
        cfg = ChainConfig(burn_in=200, step_size=0.15, path_length=10, n_chains=20, seed=2)
        X = hmc_chain(quartic_pair[0].model, np.zeros(2), cfg, 10_000).samples
        np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=0.05)

    @pytest.mark.parametrize("seed", range(5))
    def test_tuned_quartic_chain_stays_finite(self, quartic_pair, seed):
        cfg = ChainConfig(burn_in=100, n_chains=4, seed=seed)
        result = hmc_chain(quartic_pair[0].model, np.zeros(2), cfg, 100)
        assert result.samples.shape == (100, 2)
        assert np.all(np.isfinite(result.samples))
        assert TUNE_STEP_MIN <= result.step_size <= TUNE_STEP_MAX

    def test_blown_up_trajectories_are_rejected(self, quartic_pair):
        cfg = ChainConfig(burn_in=100, step_size=1.0, path_length=20, n_chains=4, seed=0)
        result = hmc_chain(quartic_pair[0].model, np.zeros(2), cfg, 400)
        assert result.divergences > 0
        assert np.all(np.isfinite(result.samples))

    def test_leapfrog_returns_non_finite_on_blow_up(self, quartic_pair):
        x, p = leapfrog(quartic_pair[0].model, np.array([3.0, 0.0]), np.zeros(2), 1.0, 20)
        assert not np.all(np.isfinite(np.concatenate([x, p])))


def _three_state_flux(samples: np.ndarray, n_chains: int) -> np.ndarray:
    """Transition counts between x < -0.5, |x| <= 0.5 and x > 0.5 along each chain."""
    states = np.digitize(samples.reshape(-1, n_chains), [-0.5, 0.5])
    counts = np.zeros((3, 3))
    np.add.at(counts, (states[:-1].ravel(), states[1:].ravel()), 1)
    return counts


def _chain_moments(samples: np.ndarray, n_chains: int):
    """Mean of (x, x²) and its standard error from the spread of per-chain means."""
    per_chain = samples.reshape(-1, n_chains, samples.shape[1])
    chain_means = np.concatenate([per_chain, per_chain ** 2], axis=2).mean(axis=0)
    return chain_means.mean(axis=0), chain_means.std(axis=0, ddof=1) / np.sqrt(n_chains)


class TestStationarity:
    @pytest.mark.parametrize(
        "run_chain, cfg",
        [
            (mala_chain, ChainConfig(burn_in=200, step_size=1.4, n_chains=200, seed=0)),
            (hmc_chain, ChainConfig(burn_in=200, step_size=0.3, path_length=5, n_chains=200, seed=0)),
        ],
    )
    def test_three_state_flux_is_symmetric(self, standard_normal_1d, run_chain, cfg):
        samples = run_chain(standard_normal_1d.model, np.zeros(1), cfg, 100_000).samples
        counts = _three_state_flux(samples, cfg.n_chains)
        for i, j in [(0, 1), (0, 2), (1, 2)]:
            assert abs(counts[i, j] - counts[j, i]) <= 4.0 * np.sqrt(counts[i, j] + counts[j, i])
        assert counts[0, 1] > 1000

    def test_mala_and_hmc_agree_on_quartic_moments(self, quartic_pair):
        model = quartic_pair[0].model
        n_chains = 50
        mala = mala_chain(model, np.zeros(2), ChainConfig(burn_in=500, step_size=0.5, n_chains=n_chains, seed=0), 100_000)
        hmc = hmc_chain(
            model, np.zeros(2), ChainConfig(burn_in=500, step_size=0.15, path_length=10, n_chains=n_chains, seed=1), 100_000
        )
        m_mala, se_mala = _chain_moments(mala.samples, n_chains)
        m_hmc, se_hmc = _chain_moments(hmc.samples, n_chains)
        assert np.all(np.abs(m_mala - m_hmc) <= 3.0 * np.sqrt(se_mala ** 2 + se_hmc ** 2))


class TestGibbs:
    def test_matches_exact_moments(self, small_rbm):
        mean, cov = rbm_exact_mixture_moments(small_rbm)
        cfg = ChainConfig(burn_in=100, thinning=5, n_chains=50, seed=0)
        X = rbm_gibbs_chain(small_rbm, small_rbm.b, cfg, 20_000).samples
        np.testing.assert_allclose(X.mean(axis=0), mean, atol=0.05)
        np.testing.assert_allclose(np.cov(X.T), cov, atol=0.06)

    def test_bad_initial_state(self, small_rbm):
        with pytest.raises(InputError):
            rbm_gibbs_chain(small_rbm, np.zeros(2), ChainConfig(), 10)


class TestDeterminism:
    def test_same_seed_same_chain(self, standard_normal_1d):
        cfg = ChainConfig(burn_in=10, step_size=1.0, n_chains=4, seed=5)
        a = mala_chain(standard_normal_1d.model, np.zeros(1), cfg, 200).samples
        b = mala_chain(standard_normal_1d.model, np.zeros(1), cfg, 200).samples
        np.testing.assert_array_equal(a, b)

    def test_different_seed_different_chain(self, standard_normal_1d):
        a = mala_chain(standard_normal_1d.model, np.zeros(1), ChainConfig(burn_in=10, step_size=1.0, seed=5), 200)
        b = mala_chain(standard_normal_1d.model, np.zeros(1), ChainConfig(burn_in=10, step_size=1.0, seed=6), 200)
        assert not np.array_equal(a.samples, b.samples)


class TestDrawPool:
    def test_auto_gaussian_is_exact(self, gaussian_pair):
        X = draw_pool(gaussian_pair[0], 100, cfg=ChainConfig(seed=3))
        np.testing.assert_array_equal(X, sample_gaussian_exact(gaussian_pair[0].params, 100, seed=3))

    def test_exact_needs_gaussian(self):
        loaded = build_model(QuarticExpFamilyParams(tau=1.0, d=2), normalize=False)
        with pytest.raises(InputError):
            draw_pool(loaded, 10, sampler="exact")

    def test_gibbs_needs_rbm(self, gaussian_pair):
        with pytest.raises(InputError):
            draw_pool(gaussian_pair[0], 10, sampler="gibbs")

    def test_unknown_sampler(self, gaussian_pair):
        with pytest.raises(InputError):
            draw_pool(gaussian_pair[0], 10, sampler="slice")
