"""
Score Service

Hyvärinen scores, score differences, Fisher divergence estimates and the
finite-difference check that every ScoreModel is held to.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from scoretest.config import FD_STEP, FD_TOLERANCE
from scoretest.errors import CapabilityError, InputError, NumericError
from scoretest.logger import score_logger
from scoretest.models.base import ScoreModel, frozen_array
from scoretest.seeding import substream


class Hypothesis(str, Enum):
    NULL = "null"
    ALTERNATIVE = "alternative"


@dataclass(frozen=True)
class DifferenceSample:
    """Per-point score differences S(X_i, model0) - S(X_i, model1)."""

    values: np.ndarray
    source_hypothesis: Hypothesis = Hypothesis.NULL

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise InputError("DifferenceSample must not be empty")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NumericError(f"DifferenceSample has a non-finite value at index {bad}", location=bad)
        object.__setattr__(self, "values", frozen_array(values))
        object.__setattr__(self, "source_hypothesis", Hypothesis(self.source_hypothesis))

    @property
    def size(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(self.values.mean())

    def standard_error(self) -> float:
        if self.size < 2:
            return float("inf")
        return float(self.values.std(ddof=1) / np.sqrt(self.size))


@dataclass(frozen=True)
class DerivativeReport:
    grad_rel_error: float
    laplacian_rel_error: float
    step: float

    def passed(self, tol: float = FD_TOLERANCE) -> bool:
        return self.grad_rel_error <= tol and self.laplacian_rel_error <= tol


def _check_finite(name: str, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        idx = np.argwhere(~np.isfinite(values))[0]
        raise NumericError(f"non-finite {name} at component {tuple(int(i) for i in idx)}", location=tuple(int(i) for i in idx))


def hyvarinen_scores(model: ScoreModel, X) -> np.ndarray:
    """Per-point Hyvärinen scores ½‖∇log q‖² + Δlog q for an (n, d) batch."""
    batch = model.as_batch(X)
    grad = model.grad_log_density(batch)
    _check_finite("gradient", grad)
    lap = model.laplacian_log_density(batch)
    _check_finite("laplacian", lap)
    return 0.5 * np.einsum("ij,ij->i", grad, grad) + lap


def hyvarinen_score_point(model: ScoreModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError(f"expected a single point, got shape {x.shape}")
    return float(hyvarinen_scores(model, x)[0])


def hyvarinen_score_sample(model: ScoreModel, X) -> float:
    batch = np.asarray(X, dtype=float)
    if batch.size == 0:
        raise InputError("cannot score an empty sample")
    return float(hyvarinen_scores(model, model.as_sample(batch)).mean())


def _check_pair(model0: ScoreModel, model1: ScoreModel) -> None:
    if model0.dim != model1.dim:
        raise InputError(f"model dimensions differ: {model0.dim} vs {model1.dim}")


def score_difference(model0: ScoreModel, model1: ScoreModel, x) -> float:
    _check_pair(model0, model1)
    return hyvarinen_score_point(model0, x) - hyvarinen_score_point(model1, x)


def score_differences(model0: ScoreModel, model1: ScoreModel, X, source=Hypothesis.NULL) -> DifferenceSample:
    _check_pair(model0, model1)
    batch = np.asarray(X, dtype=float)
    if batch.size == 0:
        raise InputError("cannot build a DifferenceSample from an empty sample")
    batch = model0.as_sample(batch)
    return DifferenceSample(hyvarinen_scores(model0, batch) - hyvarinen_scores(model1, batch), source)


def fisher_divergence_mc(model_p: ScoreModel, model_q: ScoreModel, samples_from_p) -> float:
    """Monte-Carlo Fisher divergence D_F(p‖q) from samples of p."""
    _check_pair(model_p, model_q)
    batch = np.asarray(samples_from_p, dtype=float)
    if batch.size == 0:
        raise InputError("cannot estimate a Fisher divergence from an empty sample")
    batch = model_p.as_sample(batch)
    diff = model_p.grad_log_density(batch) - model_q.grad_log_density(batch)
    _check_finite("gradient difference", diff)
    return float(0.5 * np.einsum("ij,ij->i", diff, diff).mean())


def fisher_divergence_expansion(model_p: ScoreModel, model_q: ScoreModel, samples_from_p) -> Tuple[float, float]:
    """Mean of ½‖∇log p‖² + S_H(x, q) over samples of p, with its standard error.

    Under mild regularity this equals D_F(p‖q); it needs no normalizer of q.
    """
    _check_pair(model_p, model_q)
    batch = model_p.as_sample(samples_from_p)
    grad_p = model_p.grad_log_density(batch)
    terms = 0.5 * np.einsum("ij,ij->i", grad_p, grad_p) + hyvarinen_scores(model_q, batch)
    se = float(terms.std(ddof=1) / np.sqrt(len(terms))) if len(terms) > 1 else float("inf")
    return float(terms.mean()), se


def _relative_error(actual: np.ndarray, reference: np.ndarray) -> float:
    return float(np.max(np.abs(actual - reference) / np.maximum(np.abs(reference), 1.0)))


def check_model_derivatives(model: ScoreModel, x, h: float = FD_STEP) -> DerivativeReport:
    """Compare analytic gradient/Laplacian with central differences of the log density."""
    if not model.has_unnorm_log_density:
        raise CapabilityError(f"{model.name} has no unnormalized log density to difference")
    if h <= 0:
        raise InputError(f"finite-difference step must be positive, got {h}")
    point = np.asarray(x, dtype=float)
    if point.shape != (model.dim,):
        raise InputError(f"expected a point of dimension {model.dim}, got shape {point.shape}")

    # rows: x + h e_k, then x - h e_k, then x itself
    offsets = h * np.eye(model.dim)
    stencil = np.vstack([point + offsets, point - offsets, point[None, :]])
    values = model.unnormalized(stencil)
    plus, minus, center = values[: model.dim], values[model.dim: 2 * model.dim], values[-1]

    fd_grad = (plus - minus) / (2.0 * h)
    fd_lap = np.sum(plus - 2.0 * center + minus) / h ** 2

    report = DerivativeReport(
        grad_rel_error=_relative_error(model.gradient(point), fd_grad),
        laplacian_rel_error=_relative_error(np.array([model.laplacian(point)]), np.array([fd_lap])),
        step=h,
    )
    score_logger.debug(
        f"[FD CHECK] {model.name}: grad={report.grad_rel_error:.2e} laplacian={report.laplacian_rel_error:.2e}"
    )
    return report


def probe_derivatives(model: ScoreModel, probes: int, seed: int, center=None, scale: float = 1.0) -> DerivativeReport:
    """Worst-case check_model_derivatives over `probes` Gaussian points around `center`."""
    if probes < 1:
        raise InputError(f"need at least one probe point, got {probes}")
    center = np.zeros(model.dim) if center is None else np.asarray(center, dtype=float)
    points = center + scale * substream(seed, "probes").standard_normal((probes, model.dim))
    reports = [check_model_derivatives(model, x) for x in points]
    worst = DerivativeReport(
        grad_rel_error=max(r.grad_rel_error for r in reports),
        laplacian_rel_error=max(r.laplacian_rel_error for r in reports),
        step=reports[0].step,
    )
    score_logger.info(
        f"[FD CHECK] {model.name}: {probes} probes, worst grad={worst.grad_rel_error:.2e} "
        f"laplacian={worst.laplacian_rel_error:.2e}"
    )
    return worst
