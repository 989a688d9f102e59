"""
Training Service

Score-matching fits of Gauss-Bernoulli RBMs: the empirical Hyvärinen score
as a loss, its closed-form gradient, and mini-batch gradient descent with
best-seen checkpointing and a divergence guard.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.special import expit

from scoretest.config import TRAIN_DIVERGENCE_FACTOR, TRAIN_DIVERGENCE_PATIENCE
from scoretest.errors import InputError, TrainingError
from scoretest.logger import train_logger
from scoretest.models import load_model_spec, params_from_spec
from scoretest.models.perturb import random_rbm
from scoretest.models.rbm import RbmParams, rbm_hyvarinen_closed_form
from scoretest.schemas import RbmSpec, TrainConfig
from scoretest.seeding import derive_seed, substream


@dataclass(frozen=True)
class TrainResult:
    params: RbmParams
    curve: List[float] = field(default_factory=list)
    initial_objective: float = 0.0
    final_objective: float = 0.0


def sm_objective(params: RbmParams, batch) -> float:
    return rbm_hyvarinen_closed_form(params, batch)


def sm_gradient(params: RbmParams, batch) -> Dict[str, np.ndarray]:
    """Exact partial derivatives of sm_objective with respect to W, b and c."""
    X = np.atleast_2d(np.asarray(batch, dtype=float))
    if X.shape[0] == 0:
        raise InputError("cannot differentiate the objective on an empty batch")
    if X.shape[1] != params.d_x:
        raise InputError(f"batch dimension {X.shape[1]} does not match d_x={params.d_x}")
    N = X.shape[0]
    W, b, c = params.W, params.b, params.c

    delta = expit(X @ W + c)
    S = delta * (1.0 - delta)
    R = S * (1.0 - 2.0 * delta)
    q = np.sum(W * W, axis=0)
    U = X - b - delta @ W.T
    G = (U @ W) * S
    RQ = R * q

    return {
        "W": (-U.T @ delta - X.T @ G + X.T @ RQ) / N + 2.0 * W * S.mean(axis=0),
        "b": -U.mean(axis=0),
        "c": (RQ - G).mean(axis=0),
    }


def _resolve_init(data: np.ndarray, cfg: TrainConfig, init: Optional[RbmParams]) -> RbmParams:
    if init is None and cfg.init is not None:
        if isinstance(cfg.init, RbmSpec):
            init = params_from_spec(cfg.init)
        else:
            loaded = load_model_spec(cfg.init, normalize=False)
            if loaded.family != "rbm":
                raise InputError(f"training needs an RBM to start from, got a {loaded.family} model")
            init = loaded.params
    if init is None:
        if cfg.hidden is None:
            raise InputError("training needs either an initial RBM or a hidden-unit count")
        start = random_rbm(data.shape[1], cfg.hidden, substream(cfg.seed, "init"), weight_scale=0.1)
        init = RbmParams(W=start.W, b=data.mean(axis=0), c=start.c)
    if init.d_x != data.shape[1]:
        raise InputError(f"data dimension {data.shape[1]} does not match the RBM's d_x={init.d_x}")
    return init


def _training_rows(data, cfg: TrainConfig) -> np.ndarray:
    X = np.atleast_2d(np.asarray(data, dtype=float))
    if X.shape[0] == 0:
        raise InputError("cannot train on an empty dataset")
    if not np.all(np.isfinite(X)):
        raise InputError("training data contains non-finite values")
    if cfg.N is None:
        return X
    if cfg.N > X.shape[0]:
        raise InputError(f"N={cfg.N} exceeds the {X.shape[0]} available training rows")
    rows = substream(cfg.seed, "subsample").choice(X.shape[0], size=cfg.N, replace=False)
    return X[np.sort(rows)]


def score_matching_fit(data, cfg: TrainConfig, init: Optional[RbmParams] = None) -> TrainResult:
    """Mini-batch gradient descent on the empirical Hyvärinen score.

    Returns the parameters with the lowest full-data objective seen, so the
    final objective never exceeds the initial one.
    """
    X = _training_rows(data, cfg)
    params = _resolve_init(X, cfg, init)
    values = {"W": np.array(params.W), "b": np.array(params.b), "c": np.array(params.c)}
    trainable = [k for k in ("W", "b", "c") if k not in cfg.freeze]

    initial = sm_objective(params, X)
    if not np.isfinite(initial):
        raise TrainingError("initial objective is not finite", curve=[initial])
    curve, best, best_value = [initial], params, initial
    limit = initial + TRAIN_DIVERGENCE_FACTOR * max(abs(initial), 1.0)
    strikes = 0
    rng = substream(cfg.seed, "train")
    train_logger.info(
        f"[TRAIN] N={X.shape[0]} d_x={params.d_x} d_h={params.d_h} epochs={cfg.epochs} "
        f"lr={cfg.learning_rate} batch={cfg.batch_size} initial={initial:.6g}"
    )

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(X.shape[0])
        for start in range(0, X.shape[0], cfg.batch_size):
            batch = X[order[start:start + cfg.batch_size]]
            grads = sm_gradient(RbmParams(**values), batch)
            for key in trainable:
                values[key] = values[key] - cfg.learning_rate * grads[key]
            if not all(np.all(np.isfinite(values[k])) for k in trainable):
                curve.append(float("nan"))
                raise TrainingError(f"parameters became non-finite in epoch {epoch}", curve=curve)

        current = RbmParams(**values)
        objective = sm_objective(current, X)
        curve.append(objective)
        if not np.isfinite(objective):
            raise TrainingError(f"objective became non-finite in epoch {epoch}", curve=curve)
        strikes = strikes + 1 if objective > limit else 0
        if strikes >= TRAIN_DIVERGENCE_PATIENCE:
            raise TrainingError(
                f"objective above {limit:.6g} for {strikes} consecutive epochs (last {objective:.6g})", curve=curve
            )
        if objective < best_value:
            best, best_value = current, objective
        train_logger.debug(f"[TRAIN] epoch {epoch}: objective={objective:.6g}")

    train_logger.info(f"[TRAIN] done: initial={initial:.6g} best={best_value:.6g}")
    return TrainResult(params=best, curve=curve, initial_objective=initial, final_objective=best_value)


def fit_alternative_ensemble(data, cfg: TrainConfig, init: Optional[RbmParams] = None) -> List[TrainResult]:
    """`cfg.ensemble_size` fits, each on its own N-subsample, all cold-started from the same init."""
    results = []
    for member in range(cfg.ensemble_size):
        member_cfg = cfg.model_copy(update={"seed": derive_seed(cfg.seed, "ensemble", member), "ensemble_size": 1})
        results.append(score_matching_fit(data, member_cfg, init=init))
    train_logger.info(f"[ENSEMBLE] trained {len(results)} alternative(s)")
    return results


def select_alternative(ensemble: List[TrainResult], seed: int) -> int:
    """Index of the ensemble member used as the alternative."""
    if not ensemble:
        raise InputError("cannot select from an empty ensemble")
    return int(substream(seed, "select").integers(len(ensemble)))
