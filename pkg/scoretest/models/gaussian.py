from dataclasses import dataclass, field

import numpy as np

from scoretest.errors import InputError
from scoretest.models.base import ScoreModel, frozen_array


@dataclass(frozen=True)
class GaussianParams:
    """N(mean, cov) with precision powers Σ⁻¹, Σ⁻², Σ⁻³ cached at construction."""

    mean: np.ndarray
    cov: np.ndarray
    precision: np.ndarray = field(init=False, repr=False)
    precision2: np.ndarray = field(init=False, repr=False)
    precision3: np.ndarray = field(init=False, repr=False)
    chol: np.ndarray = field(init=False, repr=False)
    log_det: float = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise InputError(f"mean of length {d} needs a {d}x{d} covariance, got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InputError("Gaussian parameters must be finite")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise InputError("covariance is not symmetric")

        eigvals, eigvecs = np.linalg.eigh(cov)
        if eigvals.min() <= 0:
            raise InputError(f"covariance is not positive definite (smallest eigenvalue {eigvals.min():.3e})")

        inv = 1.0 / eigvals
        object.__setattr__(self, "mean", frozen_array(mean))
        object.__setattr__(self, "cov", frozen_array(cov))
        object.__setattr__(self, "precision", frozen_array((eigvecs * inv) @ eigvecs.T))
        object.__setattr__(self, "precision2", frozen_array((eigvecs * inv ** 2) @ eigvecs.T))
        object.__setattr__(self, "precision3", frozen_array((eigvecs * inv ** 3) @ eigvecs.T))
        object.__setattr__(self, "chol", frozen_array(np.linalg.cholesky(cov)))
        object.__setattr__(self, "log_det", float(np.sum(np.log(eigvals))))

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


def gaussian_model(params: GaussianParams) -> ScoreModel:
    mu, prec = params.mean, params.precision
    trace = float(np.trace(prec))
    log_norm = -0.5 * (params.dim * np.log(2.0 * np.pi) + params.log_det)

    def grad(X):
        return -(X - mu) @ prec

    def laplacian(X):
        return np.full(X.shape[0], -trace)

    def unnorm(X):
        centred = X - mu
        return -0.5 * np.einsum("ij,jk,ik->i", centred, prec, centred)

    def log_density(X):
        return unnorm(X) + log_norm

    return ScoreModel(
        dim=params.dim,
        grad_log_density=grad,
        laplacian_log_density=laplacian,
        log_density=log_density,
        unnorm_log_density=unnorm,
        name="gaussian",
    )
