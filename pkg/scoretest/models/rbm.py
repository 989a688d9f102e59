"""Gauss–Bernoulli RBM with unit visible variance.

Convention: p(x, h) ∝ exp(-½‖x - b‖² + xᵀWh + cᵀh), so that

    F(x) = ½‖x - b‖² - Σ_j softplus((Wᵀx)_j + c_j),
    ∇log p(x) = -(x - b) + W δ(x),    δ = sigmoid(Wᵀx + c),
    Δlog p(x) = Σ_i [-1 + Σ_j W_ij² δ_j (1 - δ_j)].

Summing out x gives a mixture of 2^{d_h} Gaussians N(b + Wh, I) with
log-weights cᵀh + ½‖b + Wh‖² - ½‖b‖².
"""

import itertools
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit, logsumexp

from scoretest.config import RBM_EXACT_MAX_HIDDEN
from scoretest.errors import CapabilityError, InputError
from scoretest.models.base import ScoreModel, frozen_array


@dataclass(frozen=True)
class RbmParams:
    W: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if W.ndim != 2 or b.shape != (W.shape[0],) or c.shape != (W.shape[1],):
            raise InputError(f"inconsistent RBM shapes: W {W.shape}, b {b.shape}, c {c.shape}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise InputError("RBM parameters must be finite")
        object.__setattr__(self, "W", frozen_array(W))
        object.__setattr__(self, "b", frozen_array(b))
        object.__setattr__(self, "c", frozen_array(c))

    @property
    def d_x(self) -> int:
        return int(self.W.shape[0])

    @property
    def d_h(self) -> int:
        return int(self.W.shape[1])

    @property
    def dim(self) -> int:
        return self.d_x


def softplus(t):
    # log(1 + e^t) without overflow for large t
    return np.logaddexp(0.0, t)


def _as_visible(params: RbmParams, x) -> np.ndarray:
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != params.d_x:
        raise InputError(f"expected visible vectors of length {params.d_x}, got shape {np.shape(x)}")
    return X


def rbm_free_energies(params: RbmParams, X) -> np.ndarray:
    X = _as_visible(params, X)
    centred = X - params.b
    return 0.5 * np.sum(centred * centred, axis=1) - np.sum(softplus(X @ params.W + params.c), axis=1)


def rbm_free_energy(params: RbmParams, x) -> float:
    return float(rbm_free_energies(params, x)[0])


def _hidden_activations(params: RbmParams, X: np.ndarray) -> np.ndarray:
    return expit(X @ params.W + params.c)


def rbm_hyvarinen_scores(params: RbmParams, X) -> np.ndarray:
    X = _as_visible(params, X)
    delta = _hidden_activations(params, X)
    residual = X - params.b - delta @ params.W.T
    col_sq = np.sum(params.W ** 2, axis=0)
    curvature = (delta * (1.0 - delta)) @ col_sq
    return 0.5 * np.sum(residual * residual, axis=1) + curvature - params.d_x


def rbm_hyvarinen_closed_form(params: RbmParams, X) -> float:
    X = _as_visible(params, X)
    if X.shape[0] == 0:
        raise InputError("cannot score an empty sample")
    return float(rbm_hyvarinen_scores(params, X).mean())


def _hidden_configurations(d_h: int) -> np.ndarray:
    if d_h > RBM_EXACT_MAX_HIDDEN:
        raise CapabilityError(f"exact enumeration needs d_h <= {RBM_EXACT_MAX_HIDDEN}, got {d_h}")
    return np.array(list(itertools.product([0.0, 1.0], repeat=d_h)), dtype=float).reshape(-1, d_h)


def rbm_mixture(params: RbmParams) -> Tuple[np.ndarray, np.ndarray]:
    """Component means (2^{d_h}, d_x) and unnormalized log-weights of the visible marginal."""
    H = _hidden_configurations(params.d_h)
    means = params.b + H @ params.W.T
    log_w = H @ params.c + 0.5 * np.sum(means * means, axis=1) - 0.5 * float(params.b @ params.b)
    return means, log_w


def rbm_log_partition(params: RbmParams) -> float:
    """log ∫ exp(-F(x)) dx, exact for small d_h."""
    _, log_w = rbm_mixture(params)
    return float(0.5 * params.d_x * np.log(2.0 * np.pi) + logsumexp(log_w))


def rbm_model(params: RbmParams, log_partition: Optional[float] = None) -> ScoreModel:
    W, b, c = params.W, params.b, params.c
    col_sq = np.sum(W ** 2, axis=0)
    d_x = params.d_x

    def grad(X):
        return -(X - b) + expit(X @ W + c) @ W.T

    def laplacian(X):
        delta = expit(X @ W + c)
        return (delta * (1.0 - delta)) @ col_sq - d_x

    def unnorm(X):
        return -rbm_free_energies(params, X)

    log_density = None
    if log_partition is not None:
        def log_density(X):
            return unnorm(X) - log_partition

    return ScoreModel(
        dim=d_x,
        grad_log_density=grad,
        laplacian_log_density=laplacian,
        log_density=log_density,
        unnorm_log_density=unnorm,
        name=f"rbm({d_x}x{params.d_h})",
    )
