"""
Sampler Service

Exact Gaussian draws, MALA, HMC and block-Gibbs for the RBM, plus the
exact mixture moments used as an oracle for small RBMs.

Every chain runs `cfg.n_chains` independent chains in lock-step as one
(n_chains, d) state; output rows are ordered by (iteration, chain).
Randomness comes only from `substream(cfg.seed, <sampler>, ...)`.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit, softmax

from scoretest.config import (
    GIBBS_BURN_IN,
    HMC_BURN_IN,
    HMC_DIVERGENCE,
    HMC_STEP_SIZE,
    HMC_TARGET_ACCEPT,
    MALA_BURN_IN,
    MALA_TARGET_ACCEPT,
    TUNE_ROUNDS,
    TUNE_STEP_MAX,
    TUNE_STEP_MIN,
    TUNE_STEPS,
)
from scoretest.errors import InputError, NumericError
from scoretest.logger import sampler_logger
from scoretest.models import LoadedModel
from scoretest.models.base import ScoreModel
from scoretest.models.gaussian import GaussianParams
from scoretest.models.rbm import RbmParams, rbm_mixture
from scoretest.schemas import ChainConfig
from scoretest.seeding import substream


@dataclass(frozen=True)
class ChainResult:
    samples: np.ndarray
    acceptance_rate: float
    divergences: int = 0
    step_size: Optional[float] = None


def sample_gaussian_exact(params: GaussianParams, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise InputError(f"need at least one sample, got n={n}")
    rng = substream(seed, "gaussian-exact")
    z = rng.standard_normal((n, params.dim))
    return params.mean + z @ params.chol.T


def _initial_state(model: ScoreModel, init, n_chains: int) -> np.ndarray:
    x0 = np.asarray(init, dtype=float)
    if x0.shape != (model.dim,):
        raise InputError(f"initial state must have shape ({model.dim},), got {x0.shape}")
    return np.tile(x0, (n_chains, 1))


def _checked_grad(model: ScoreModel, X: np.ndarray) -> np.ndarray:
    g = model.grad_log_density(X)
    if not np.all(np.isfinite(g)):
        row = int(np.argwhere(~np.isfinite(g))[0, 0])
        raise NumericError(f"non-finite gradient at chain state {X[row].tolist()}", location=X[row].copy())
    return g


def _schedule(n: int, cfg: ChainConfig, burn_in: int) -> Tuple[int, int]:
    """Number of kept draws per chain and total iterations."""
    if n < 1:
        raise InputError(f"need at least one sample, got n={n}")
    per_chain = -(-n // cfg.n_chains)
    return per_chain, burn_in + per_chain * cfg.thinning


def _mala_log_q(to: np.ndarray, frm: np.ndarray, grad_frm: np.ndarray, eps: float) -> np.ndarray:
    diff = to - frm - 0.5 * eps ** 2 * grad_frm
    return -np.sum(diff * diff, axis=1) / (2.0 * eps ** 2)


def _mala_run(model: ScoreModel, X: np.ndarray, eps: float, iterations: int, rng, keep_from: int, thinning: int):
    """Returns (state, kept draws, acceptance rate, divergences).

    A proposal with a non-finite position, log density or gradient is
    rejected and counted as a divergence; only a chain state raises.
    """
    logp = model.unnormalized(X)
    grad = _checked_grad(model, X)
    kept, accepted, proposed, divergences = [], 0, 0, 0
    for it in range(iterations):
        proposal = X + 0.5 * eps ** 2 * grad + eps * rng.standard_normal(X.shape)
        with np.errstate(over="ignore", invalid="ignore"):
            logp_prop = model.unnormalized(proposal)
            grad_prop = model.grad_log_density(proposal)
            diverged = ~(
                np.all(np.isfinite(proposal), axis=1) & np.isfinite(logp_prop) & np.all(np.isfinite(grad_prop), axis=1)
            )
            log_alpha = (
                logp_prop - logp
                + _mala_log_q(X, proposal, grad_prop, eps)
                - _mala_log_q(proposal, X, grad, eps)
            )
            accept = ~diverged & (np.log(rng.random(X.shape[0])) < log_alpha)
        X = np.where(accept[:, None], proposal, X)
        logp = np.where(accept, logp_prop, logp)
        grad = np.where(accept[:, None], grad_prop, grad)
        divergences += int(diverged.sum())
        if it >= keep_from:
            accepted += int(accept.sum())
            proposed += accept.size
            if (it - keep_from + 1) % thinning == 0:
                kept.append(X.copy())
    return X, kept, (accepted / proposed if proposed else 0.0), divergences


def leapfrog(model: ScoreModel, x: np.ndarray, p: np.ndarray, step_size: float, n_steps: int):
    """Unit-mass leapfrog for H = -log p(x) + ½‖p‖²; works on (d,) or (m, d) arrays.

    A trajectory that blows up comes back with non-finite entries.
    """
    single = np.ndim(x) == 1
    X = np.atleast_2d(np.array(x, dtype=float))
    P = np.atleast_2d(np.array(p, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        P = P + 0.5 * step_size * model.grad_log_density(X)
        for step in range(n_steps):
            X = X + step_size * P
            if step != n_steps - 1:
                P = P + step_size * model.grad_log_density(X)
        P = P + 0.5 * step_size * model.grad_log_density(X)
    return (X[0], P[0]) if single else (X, P)


def _hmc_run(model: ScoreModel, X: np.ndarray, eps: float, L: int, iterations: int, rng, keep_from: int, thinning: int):
    """Returns (state, kept draws, acceptance rate, divergences).

    A trajectory with non-finite or |ΔH| > HMC_DIVERGENCE energy is rejected
    and counted, burn-in included.
    """
    logp = model.unnormalized(X)
    _checked_grad(model, X)
    kept, accepted, proposed, divergences = [], 0, 0, 0
    for it in range(iterations):
        P = rng.standard_normal(X.shape)
        X_new, P_new = leapfrog(model, X, P, eps, L)
        with np.errstate(over="ignore", invalid="ignore"):
            logp_new = model.unnormalized(X_new)
            h_old = -logp + 0.5 * np.sum(P * P, axis=1)
            h_new = -logp_new + 0.5 * np.sum(P_new * P_new, axis=1)
            delta_h = h_new - h_old
            diverged = ~np.isfinite(delta_h) | (np.abs(delta_h) > HMC_DIVERGENCE)
            accept = ~diverged & (np.log(rng.random(X.shape[0])) < -delta_h)
        X = np.where(accept[:, None], X_new, X)
        logp = np.where(accept, logp_new, logp)
        divergences += int(diverged.sum())
        if it >= keep_from:
            accepted += int(accept.sum())
            proposed += accept.size
            if (it - keep_from + 1) % thinning == 0:
                kept.append(X.copy())
    return X, kept, (accepted / proposed if proposed else 0.0), divergences


def _stack(kept, n: int, d: int) -> np.ndarray:
    if not kept:
        return np.empty((0, d))
    return np.stack(kept, axis=0).reshape(-1, d)[:n]


def tune_step_size(model: ScoreModel, init, kind: str, target: Optional[float] = None, seed: int = 0,
                   path_length: int = 20, start: Optional[float] = None) -> float:
    """Pilot runs nudging log ε toward the target acceptance rate."""
    if kind not in ("mala", "hmc"):
        raise InputError(f"cannot tune step size for sampler '{kind}'")
    target = target if target is not None else (MALA_TARGET_ACCEPT if kind == "mala" else HMC_TARGET_ACCEPT)
    eps = start if start is not None else (1.0 if kind == "mala" else HMC_STEP_SIZE)
    X = _initial_state(model, init, 8)
    for rnd in range(TUNE_ROUNDS):
        rng = substream(seed, "tune", kind, rnd)
        if kind == "mala":
            X, _, acc, _ = _mala_run(model, X, eps, TUNE_STEPS, rng, 0, TUNE_STEPS)
        else:
            X, _, acc, _ = _hmc_run(model, X, eps, path_length, max(TUNE_STEPS // 5, 1), rng, 0, TUNE_STEPS)
        eps = float(np.clip(eps * np.exp(1.5 * (acc - target)), TUNE_STEP_MIN, TUNE_STEP_MAX))
    sampler_logger.info(f"[TUNE] {kind} on {model.name}: step_size={eps:.4g} (target acceptance {target})")
    return eps


def mala_chain(model: ScoreModel, init, cfg: ChainConfig, n: int) -> ChainResult:
    burn_in = MALA_BURN_IN if cfg.burn_in is None else cfg.burn_in
    eps = cfg.step_size or tune_step_size(model, init, "mala", seed=cfg.seed)
    per_chain, iterations = _schedule(n, cfg, burn_in)
    rng = substream(cfg.seed, "mala")
    _, kept, acc, div = _mala_run(
        model, _initial_state(model, init, cfg.n_chains), eps, iterations, rng, burn_in, cfg.thinning
    )
    if div:
        sampler_logger.warning(f"[MALA] {model.name}: {div} proposals rejected for non-finite density or gradient")
    sampler_logger.info(f"[MALA] {model.name}: n={n} step_size={eps:.4g} acceptance={acc:.3f}")
    return ChainResult(samples=_stack(kept, n, model.dim), acceptance_rate=acc, divergences=div, step_size=eps)


def hmc_chain(model: ScoreModel, init, cfg: ChainConfig, n: int) -> ChainResult:
    burn_in = HMC_BURN_IN if cfg.burn_in is None else cfg.burn_in
    eps = cfg.step_size or tune_step_size(model, init, "hmc", seed=cfg.seed, path_length=cfg.path_length)
    per_chain, iterations = _schedule(n, cfg, burn_in)
    rng = substream(cfg.seed, "hmc")
    _, kept, acc, div = _hmc_run(
        model, _initial_state(model, init, cfg.n_chains), eps, cfg.path_length, iterations, rng, burn_in, cfg.thinning
    )
    if div:
        sampler_logger.warning(f"[HMC] {model.name}: {div} divergent trajectories (|dH| > {HMC_DIVERGENCE:g})")
    sampler_logger.info(f"[HMC] {model.name}: n={n} step_size={eps:.4g} L={cfg.path_length} acceptance={acc:.3f}")
    return ChainResult(samples=_stack(kept, n, model.dim), acceptance_rate=acc, divergences=div, step_size=eps)


def rbm_gibbs_chain(params: RbmParams, init, cfg: ChainConfig, n: int) -> ChainResult:
    """Block Gibbs: h|x ~ Bernoulli(sigmoid(Wᵀx + c)), x|h ~ N(b + Wh, I)."""
    burn_in = GIBBS_BURN_IN if cfg.burn_in is None else cfg.burn_in
    x0 = np.asarray(init, dtype=float)
    if x0.shape != (params.d_x,):
        raise InputError(f"initial state must have shape ({params.d_x},), got {x0.shape}")
    per_chain, iterations = _schedule(n, cfg, burn_in)
    rng = substream(cfg.seed, "gibbs")
    X = np.tile(x0, (cfg.n_chains, 1))
    kept = []
    for it in range(iterations):
        H = (rng.random((cfg.n_chains, params.d_h)) < expit(X @ params.W + params.c)).astype(float)
        X = params.b + H @ params.W.T + rng.standard_normal(X.shape)
        if it >= burn_in and (it - burn_in + 1) % cfg.thinning == 0:
            kept.append(X.copy())
    sampler_logger.info(f"[GIBBS] rbm({params.d_x}x{params.d_h}): n={n} burn_in={burn_in} sweeps")
    return ChainResult(samples=_stack(kept, n, params.d_x), acceptance_rate=1.0)


def rbm_exact_mixture_moments(params: RbmParams) -> Tuple[np.ndarray, np.ndarray]:
    """Exact mean and covariance of the visible marginal (d_h <= 12)."""
    means, log_w = rbm_mixture(params)
    weights = softmax(log_w)
    mean = weights @ means
    second = (means * weights[:, None]).T @ means
    cov = np.eye(params.d_x) + second - np.outer(mean, mean)
    return mean, cov


def sample_rbm_mixture(params: RbmParams, n: int, seed: int) -> np.ndarray:
    """Exact draws from the visible marginal by picking a hidden configuration, then N(b + Wh, I)."""
    if n < 1:
        raise InputError(f"need at least one sample, got n={n}")
    means, log_w = rbm_mixture(params)
    rng = substream(seed, "rbm-exact")
    component = rng.choice(len(means), size=n, p=softmax(log_w))
    return means[component] + rng.standard_normal((n, params.d_x))


def mode_proxy(loaded: LoadedModel) -> np.ndarray:
    """Chain start: μ for Gaussian, 0 for quartic, b for RBM."""
    if loaded.family == "gaussian":
        return np.array(loaded.params.mean)
    if loaded.family == "rbm":
        return np.array(loaded.params.b)
    return np.zeros(loaded.model.dim)


def draw_pool(loaded: LoadedModel, n: int, sampler: str = "auto", cfg: Optional[ChainConfig] = None) -> np.ndarray:
    """n draws from a loaded model with the family's default (or the requested) sampler."""
    cfg = cfg or ChainConfig()
    if sampler == "auto":
        sampler = {"gaussian": "exact", "quartic": "hmc", "rbm": "gibbs"}[loaded.family]
    if sampler == "exact":
        if loaded.family != "gaussian":
            raise InputError(f"exact sampling is only available for Gaussian models, not {loaded.family}")
        return sample_gaussian_exact(loaded.params, n, cfg.seed)
    if sampler == "gibbs":
        if loaded.family != "rbm":
            raise InputError(f"Gibbs sampling is only available for RBMs, not {loaded.family}")
        return rbm_gibbs_chain(loaded.params, mode_proxy(loaded), cfg, n).samples
    if sampler == "mala":
        return mala_chain(loaded.model, mode_proxy(loaded), cfg, n).samples
    if sampler == "hmc":
        return hmc_chain(loaded.model, mode_proxy(loaded), cfg, n).samples
    raise InputError(f"unknown sampler '{sampler}'")
