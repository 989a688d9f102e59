"""
Exponent Service

Empirical log-MGFs of score differences, their Legendre transforms (the
Chernoff/Cramér error exponents), and the closed forms for the
shared-covariance Gaussian pair N(0, Σ) vs N(μ, Σ).

Sign conventions: null diffs are D = S(x, p_null) - S(x, p_alt) drawn under
the null, alternative diffs are D' = S(x, p_alt) - S(x, p_null) drawn under
the alternative. The HST rejects the null when mean(D) > T.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp, softmax
from scipy.stats import norm

from scoretest.config import THETA_MAX, THETA_MAX_LIMIT, THETA_TOL
from scoretest.errors import InputError, NumericError
from scoretest.logger import exponent_logger
from scoretest.models.gaussian import GaussianParams
from scoretest.schemas import ExponentReport
from scoretest.services.score_service import DifferenceSample, Hypothesis

Diffs = Union[DifferenceSample, np.ndarray, list]


@dataclass(frozen=True)
class ExponentResult:
    T: float
    theta_star: float
    exponent: float
    unbounded: bool
    error_kind: str
    m: int = 0
    diagnostics: Dict = field(default_factory=dict)

    def to_report(self) -> ExponentReport:
        return ExponentReport(
            error_kind=self.error_kind,
            T=self.T,
            theta_star=self.theta_star,
            exponent=self.exponent,
            unbounded=self.unbounded,
            m=self.m,
        )


@dataclass(frozen=True)
class ThresholdRange:
    """Open interval of thresholds where both exponents are positive."""

    lo: float
    hi: float
    degenerate: bool

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, T: float) -> bool:
        return self.lo < T < self.hi


def _as_sample(diffs: Diffs, source: Hypothesis = Hypothesis.NULL) -> DifferenceSample:
    if isinstance(diffs, DifferenceSample):
        return diffs
    return DifferenceSample(np.asarray(diffs, dtype=float), source)


# =====================
# EMPIRICAL LOG-MGF
# =====================
def log_mgf_empirical(diffs: Diffs, theta):
    """log[(1/m) Σ exp(θ D_k)], vectorised over an array of θ."""
    sample = _as_sample(diffs)
    thetas = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(thetas)):
        raise InputError(f"theta must be finite, got {theta}")
    flat = thetas.ravel()
    out = logsumexp(np.outer(flat, sample.values), axis=1) - math.log(sample.size)
    out[flat == 0.0] = 0.0
    out = out.reshape(thetas.shape)
    return float(out) if thetas.ndim == 0 else out


def log_mgf_gradient(diffs: Diffs, theta: float) -> float:
    """φ̂'(θ): the mean of D under the θ-tilted empirical distribution."""
    sample = _as_sample(diffs)
    weights = softmax(float(theta) * sample.values)
    return float(weights @ sample.values)


# =====================
# LEGENDRE TRANSFORM
# =====================
def legendre_transform(
    phi: Callable[[float], float],
    T: float,
    theta_max: float = THETA_MAX,
    tol: float = THETA_TOL,
    phi_prime0: Optional[float] = None,
    error_kind: str = "type1",
) -> ExponentResult:
    """sup over θ >= 0 of θT - φ(θ) for a convex φ with φ(0) = 0.

    Bounded Brent search on [0, theta_max]; while the maximiser sits on the
    upper edge and the objective still rises, the bracket grows tenfold up
    to THETA_MAX_LIMIT, after which the result is flagged unbounded.
    """
    if theta_max <= 0 or tol <= 0:
        raise InputError(f"theta_max and tol must be positive, got {theta_max}, {tol}")
    if not math.isfinite(T):
        raise InputError(f"threshold must be finite, got {T}")

    evaluations = {"count": 0}

    def objective(theta: float) -> float:
        evaluations["count"] += 1
        value = float(phi(theta))
        if not math.isfinite(value):
            raise NumericError(f"log-MGF is not finite at theta={theta}", location=theta)
        return theta * T - value

    phi0 = -objective(0.0)
    if abs(phi0) > 1e-12:
        raise InputError(f"log-MGF must vanish at theta=0, got {phi0}")

    if phi_prime0 is not None and T <= phi_prime0:
        return ExponentResult(T, 0.0, 0.0, False, error_kind, diagnostics={"evaluations": 1, "bracket": (0.0, 0.0)})

    hi, unbounded, iterations = float(theta_max), False, 0
    while True:
        res = minimize_scalar(lambda t: -objective(t), bounds=(0.0, hi), method="bounded", options={"xatol": tol})
        iterations += int(res.nfev)
        theta_star = float(res.x)
        step = max(1e-6 * hi, 10 * tol)
        at_edge = theta_star >= hi - step and objective(hi) > objective(hi - step)
        if not at_edge:
            break
        if hi >= THETA_MAX_LIMIT:
            theta_star, unbounded = hi, True
            break
        hi = min(10.0 * hi, THETA_MAX_LIMIT)

    value = objective(theta_star)
    if value <= 0.0:
        theta_star, value = 0.0, 0.0
    if unbounded:
        exponent_logger.warning(f"[LEGENDRE] {error_kind} exponent at T={T:.6g} still rising at theta={hi:g}")
    return ExponentResult(
        T=float(T),
        theta_star=theta_star,
        exponent=max(value, 0.0),
        unbounded=unbounded,
        error_kind=error_kind,
        diagnostics={"evaluations": evaluations["count"], "iterations": iterations, "bracket": (0.0, hi)},
    )


def type1_exponent_empirical(null_diffs: Diffs, T: float, theta_max: float = THETA_MAX, tol: float = THETA_TOL) -> ExponentResult:
    sample = _as_sample(null_diffs, Hypothesis.NULL)
    result = legendre_transform(
        lambda theta: log_mgf_empirical(sample, theta),
        T,
        theta_max=theta_max,
        tol=tol,
        phi_prime0=sample.mean(),
        error_kind="type1",
    )
    return replace(result, m=sample.size)


def type2_exponent_empirical(alt_diffs: Diffs, T: float, theta_max: float = THETA_MAX, tol: float = THETA_TOL) -> ExponentResult:
    """sup over θ >= 0 of -θT - φ₁(θ), with φ₁ the log-MGF of the alternative diffs."""
    sample = _as_sample(alt_diffs, Hypothesis.ALTERNATIVE)
    result = legendre_transform(
        lambda theta: log_mgf_empirical(sample, theta),
        -T,
        theta_max=theta_max,
        tol=tol,
        phi_prime0=sample.mean(),
        error_kind="type2",
    )
    return replace(result, T=float(T), m=sample.size)


def threshold_range(null_diffs: Diffs, alt_diffs: Diffs) -> ThresholdRange:
    """(-D_F(p_null‖p_alt), D_F(p_alt‖p_null)) estimated from the diff means."""
    null_sample = _as_sample(null_diffs, Hypothesis.NULL)
    alt_sample = _as_sample(alt_diffs, Hypothesis.ALTERNATIVE)
    if not np.any(null_sample.values) and not np.any(alt_sample.values):
        return ThresholdRange(0.0, 0.0, True)
    lo, hi = null_sample.mean(), -alt_sample.mean()
    return ThresholdRange(lo, hi, not lo < hi)


def exponent_curve(null_diffs: Diffs, alt_diffs: Diffs, thresholds: Iterable[float]) -> pd.DataFrame:
    null_sample = _as_sample(null_diffs, Hypothesis.NULL)
    alt_sample = _as_sample(alt_diffs, Hypothesis.ALTERNATIVE)
    rows = []
    for T in thresholds:
        r1 = type1_exponent_empirical(null_sample, T)
        r2 = type2_exponent_empirical(alt_sample, T)
        rows.append({
            "T": float(T),
            "type1_exponent": r1.exponent,
            "type2_exponent": r2.exponent,
            "theta1": r1.theta_star,
            "theta2": r2.theta_star,
            "unbounded": r1.unbounded or r2.unbounded,
        })
    return pd.DataFrame(rows, columns=["T", "type1_exponent", "type2_exponent", "theta1", "theta2", "unbounded"])


# =====================
# GAUSSIAN CLOSED FORMS
# =====================
def _gaussian_moments(params: GaussianParams, mean_shift) -> Tuple[float, float]:
    """a = ½ μᵀΣ⁻²μ and v = μᵀΣ⁻³μ; D is N(-a, v) under the null and N(a, v) under the alternative."""
    mu = np.asarray(mean_shift, dtype=float)
    if mu.shape != (params.dim,):
        raise InputError(f"mean shift must have shape ({params.dim},), got {mu.shape}")
    return 0.5 * float(mu @ params.precision2 @ mu), float(mu @ params.precision3 @ mu)


def _tail_exponent(distance: float, v: float) -> float:
    if distance <= 0.0:
        return 0.0
    if v == 0.0:
        return math.inf
    return distance ** 2 / (2.0 * v)


def gaussian_published_type1_exponent(params: GaussianParams, mean_shift, T: float) -> float:
    """(4T - μᵀΣ⁻²μ)² / (8 μᵀΣ⁻³μ) for T >= μᵀΣ⁻²μ / 4, as published; comparison only."""
    a, v = _gaussian_moments(params, mean_shift)
    if T < a / 2.0:
        return 0.0
    return math.inf if v == 0.0 else (4.0 * T - 2.0 * a) ** 2 / (8.0 * v)


def gaussian_type1_exponent(params: GaussianParams, mean_shift, T: float, convention: str = "corrected") -> float:
    """(T + a)² / (2v) for T > -a, else 0."""
    if convention == "published":
        return gaussian_published_type1_exponent(params, mean_shift, T)
    if convention != "corrected":
        raise InputError(f"unknown exponent convention '{convention}'")
    a, v = _gaussian_moments(params, mean_shift)
    return _tail_exponent(T + a, v)


def gaussian_type2_exponent(params: GaussianParams, mean_shift, T: float) -> float:
    """(a - T)² / (2v) for T < a, else 0."""
    a, v = _gaussian_moments(params, mean_shift)
    return _tail_exponent(a - T, v)


def gaussian_threshold_range(params: GaussianParams, mean_shift) -> ThresholdRange:
    a, _ = _gaussian_moments(params, mean_shift)
    return ThresholdRange(-a, a, a == 0.0)


def gaussian_exact_errors(params: GaussianParams, mean_shift, T: float, n: int, log: bool = False) -> Tuple[float, float]:
    """Exact (α_n, β_n) of the n-sample HST; log-probabilities with `log=True`."""
    if n < 1:
        raise InputError(f"sample size must be positive, got {n}")
    a, v = _gaussian_moments(params, mean_shift)
    if v == 0.0:
        alpha, beta = float(0.0 > T), float(0.0 <= T)
        return (math.log(alpha) if alpha else -math.inf, math.log(beta) if beta else -math.inf) if log else (alpha, beta)
    scale = math.sqrt(v / n)
    upper, lower = (T + a) / scale, (T - a) / scale
    if log:
        return float(norm.logsf(upper)), float(norm.logcdf(lower))
    return float(norm.sf(upper)), float(norm.cdf(lower))


def gaussian_lrt_exponents(params: GaussianParams, mean_shift, T_L: float) -> Tuple[float, float]:
    """Type-I/type-II exponents of the per-sample log-likelihood-ratio test.

    With m = μᵀΣ⁻¹μ the averaged log ratio is N(-m/2, m/n) under the null
    and N(m/2, m/n) under the alternative.
    """
    mu = np.asarray(mean_shift, dtype=float)
    if mu.shape != (params.dim,):
        raise InputError(f"mean shift must have shape ({params.dim},), got {mu.shape}")
    m = float(mu @ params.precision @ mu)
    return _tail_exponent(T_L + m / 2.0, m), _tail_exponent(m / 2.0 - T_L, m)


def gaussian_lrt_exact_errors(params: GaussianParams, mean_shift, T_L: float, n: int) -> Tuple[float, float]:
    mu = np.asarray(mean_shift, dtype=float)
    m = float(mu @ params.precision @ mu)
    if m == 0.0:
        return float(0.0 > T_L), float(0.0 <= T_L)
    scale = math.sqrt(m / n)
    return float(norm.sf((T_L + m / 2.0) / scale)), float(norm.cdf((T_L - m / 2.0) / scale))
