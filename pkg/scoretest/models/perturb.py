"""Alternative hypotheses built by perturbing a null model's parameters."""

import numpy as np

from scoretest.config import SIGMA_PTB, TAU_PTB
from scoretest.errors import InputError
from scoretest.models.gaussian import GaussianParams
from scoretest.models.quartic import QuarticExpFamilyParams
from scoretest.models.rbm import RbmParams


def perturb_gaussian_mean(params: GaussianParams, rng: np.random.Generator, sigma_ptb: float = SIGMA_PTB) -> GaussianParams:
    return GaussianParams(mean=params.mean + rng.normal(0.0, sigma_ptb, size=params.dim), cov=params.cov)


def perturb_gaussian_cov(
    params: GaussianParams,
    rng: np.random.Generator,
    sigma_ptb: float = SIGMA_PTB,
    mode: str = "multiplicative",
) -> GaussianParams:
    """Log-normal noise on the covariance diagonal."""
    noise = np.exp(rng.normal(0.0, sigma_ptb, size=params.dim))
    cov = np.array(params.cov, copy=True)
    idx = np.diag_indices(params.dim)
    if mode == "multiplicative":
        cov[idx] = cov[idx] * noise
    elif mode == "additive":
        cov[idx] = cov[idx] + noise
    else:
        raise InputError(f"unknown covariance perturbation mode '{mode}'")
    # GaussianParams rejects a perturbation that leaves the PD cone
    return GaussianParams(mean=params.mean, cov=cov)


def perturb_quartic_tau(params: QuarticExpFamilyParams, tau_ptb: float = TAU_PTB) -> QuarticExpFamilyParams:
    return QuarticExpFamilyParams(tau=params.tau + tau_ptb, d=params.d)


def perturb_rbm_weights(params: RbmParams, rng: np.random.Generator, sigma_ptb: float = SIGMA_PTB) -> RbmParams:
    return RbmParams(W=params.W + rng.normal(0.0, sigma_ptb, size=params.W.shape), b=params.b, c=params.c)


def random_rbm(d_x: int, d_h: int, rng: np.random.Generator, weight_scale: float = 1.0) -> RbmParams:
    """Standard-normal weights and zero biases."""
    return RbmParams(W=weight_scale * rng.standard_normal((d_x, d_h)), b=np.zeros(d_x), c=np.zeros(d_h))
