"""
Testing Service

The score-based (HST) and likelihood-ratio (LRT) decision rules, threshold
policies, and the resampling harness that turns two sample pools into
empirical error exponents across test sizes n.

Both statistics are oriented the same way: the null is rejected when the
per-sample average exceeds the threshold (ties keep the null).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import softmax

from scoretest.artifacts import SWEEP_COLUMNS, write_sweep_csv
from scoretest.errors import InputError
from scoretest.logger import sweep_logger
from scoretest.models.base import ScoreModel
from scoretest.schemas import SweepConfig
from scoretest.seeding import substream
from scoretest.services.exponent_service import (
    log_mgf_empirical,
    threshold_range,
    type1_exponent_empirical,
    type2_exponent_empirical,
)
from scoretest.services.score_service import DifferenceSample, Hypothesis, hyvarinen_scores, score_differences


# =====================
# DECISION RULES
# =====================
def _nonempty_batch(model: ScoreModel, X) -> np.ndarray:
    batch = np.asarray(X, dtype=float)
    if batch.size == 0:
        raise InputError("cannot test an empty sample")
    return model.as_sample(batch)


def hst_statistic(model0: ScoreModel, model1: ScoreModel, X) -> float:
    """(1/n) Σ [S_H(X_i, p_null) - S_H(X_i, p_alt)]."""
    return score_differences(model0, model1, _nonempty_batch(model0, X)).mean()


def hst_decide(model0: ScoreModel, model1: ScoreModel, X, T: float) -> int:
    return int(hst_statistic(model0, model1, X) > T)


def log_likelihood_ratios(model0: ScoreModel, model1: ScoreModel, X) -> np.ndarray:
    """Per-point log p_alt(x) - log p_null(x); both models need a normalizer."""
    batch = _nonempty_batch(model0, X)
    return model1.normalized(batch) - model0.normalized(batch)


def lrt_decide(model0: ScoreModel, model1: ScoreModel, X, T_L: float) -> int:
    return int(float(log_likelihood_ratios(model0, model1, X).mean()) > T_L)


# =====================
# POOLS AND THRESHOLDS
# =====================
def difference_pools(model0: ScoreModel, model1: ScoreModel, null_pool, alt_pool) -> Tuple[DifferenceSample, DifferenceSample]:
    """Null diffs D = S(p_null) - S(p_alt) on null points, alternative diffs D' = -D on alternative points."""
    null_diffs = score_differences(model0, model1, null_pool, Hypothesis.NULL)
    alt_diffs = score_differences(model1, model0, alt_pool, Hypothesis.ALTERNATIVE)
    return null_diffs, alt_diffs


@dataclass(frozen=True)
class ThresholdChoice:
    threshold: float
    policy: str
    separable: bool = False


def _n1_balance(null_stat: np.ndarray, alt_stat: np.ndarray) -> ThresholdChoice:
    """T equalising the n = 1 rates P_null(D > T) and P_alt(D <= T)."""
    null_sorted, alt_sorted = np.sort(null_stat), np.sort(alt_stat)
    if null_sorted[-1] < alt_sorted[0]:
        return ThresholdChoice(0.5 * (null_sorted[-1] + alt_sorted[0]), "n1-balance", True)

    def gap(T: float) -> float:
        alpha = 1.0 - np.searchsorted(null_sorted, T, side="right") / null_sorted.size
        beta = np.searchsorted(alt_sorted, T, side="right") / alt_sorted.size
        return alpha - beta

    lo = min(null_sorted[0], alt_sorted[0])
    hi = max(null_sorted[-1], alt_sorted[-1])
    # alpha - beta falls from +1 to -1 across [lo, hi]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, abs(mid)):
            break
    return ThresholdChoice(0.5 * (lo + hi), "n1-balance", False)


def choose_threshold(null_diffs: DifferenceSample, alt_diffs: DifferenceSample, policy: str = "midpoint") -> ThresholdChoice:
    """midpoint | n1-balance | fixed:<T>, evaluated on HST difference pools."""
    if policy.startswith("fixed:"):
        try:
            return ThresholdChoice(float(policy.split(":", 1)[1]), policy)
        except ValueError:
            raise InputError(f"cannot parse threshold in policy '{policy}'")

    null_stat, alt_stat = null_diffs.values, -alt_diffs.values
    if np.ptp(np.concatenate([null_stat, alt_stat])) == 0.0:
        raise InputError("null and alternative pools give identical statistics; no threshold separates them")

    if policy == "midpoint":
        interval = threshold_range(null_diffs, alt_diffs)
        if interval.degenerate:
            raise InputError(f"degenerate threshold range ({interval.lo:.6g}, {interval.hi:.6g})")
        choice = ThresholdChoice(interval.midpoint, policy)
    elif policy == "n1-balance":
        choice = _n1_balance(null_stat, alt_stat)
    else:
        raise InputError(f"unknown threshold policy '{policy}'")
    sweep_logger.info(f"[THRESHOLD] policy={choice.policy} T={choice.threshold:.6g} separable={choice.separable}")
    return choice


# =====================
# RESAMPLING HARNESS
# =====================
@dataclass
class ErrorSweepTable:
    """One row per (run, n); log-error columns are log(α̂)/n and log(β̂)/n."""

    rows: List[Dict] = field(default_factory=list)
    threshold: float = 0.0
    test: str = "hst"
    estimator: str = "plain"
    smoothing_floor: float = 0.0
    metadata: Dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=SWEEP_COLUMNS)

    def summary(self) -> pd.DataFrame:
        """Mean and spread over runs for each n."""
        frame = self.to_frame()
        grouped = frame.groupby("n")[["emp_exp1", "emp_exp2", "theo_exp1", "theo_exp2"]]
        return grouped.mean().join(grouped.std(ddof=0).add_suffix("_std")).reset_index()

    def write_csv(self, path: Union[str, Path]) -> Path:
        return write_sweep_csv(path, self.rows)


@dataclass(frozen=True)
class _Pools:
    """Per-point statistics in rejection orientation, plus the tilting parameters."""

    null_stat: np.ndarray
    alt_stat: np.ndarray
    theta1: float
    theta2: float


def _plain_rates(null_stat, alt_stat, n, T, trials, rng) -> Tuple[float, float]:
    null_means = null_stat[rng.integers(0, null_stat.size, size=(trials, n))].mean(axis=1)
    alt_means = alt_stat[rng.integers(0, alt_stat.size, size=(trials, n))].mean(axis=1)
    false_alarms = int(np.count_nonzero(null_means > T))
    misses = int(np.count_nonzero(alt_means <= T))
    return (false_alarms + 1) / (trials + 1), (misses + 1) / (trials + 1)


def _tilted_tail(values: np.ndarray, n: int, level: float, strict: bool, theta: float, trials: int, rng) -> float:
    """Importance-sampled P(mean of n resampled values exceeds level).

    Indices come from the θ-tilted pool and each trial carries the
    likelihood ratio exp(n φ̂(θ) - θ Σ values).
    """
    weights = softmax(theta * values)
    idx = rng.choice(values.size, size=(trials, n), p=weights)
    sums = values[idx].sum(axis=1)
    hit = sums / n > level if strict else sums / n >= level
    log_ratio = n * log_mgf_empirical(values, theta) - theta * sums
    return float(np.mean(np.exp(np.where(hit, log_ratio, -np.inf))))


def _tilted_rates(pools: _Pools, n, T, trials, rng) -> Tuple[float, float]:
    floor = 1.0 / (trials + 1)
    plain_alpha, plain_beta = _plain_rates(pools.null_stat, pools.alt_stat, n, T, trials, rng)
    alpha, beta = plain_alpha, plain_beta
    if pools.theta1 > 0.0:
        estimate = _tilted_tail(pools.null_stat, n, T, True, pools.theta1, trials, rng)
        alpha = estimate if estimate > 0.0 else floor
    if pools.theta2 > 0.0:
        estimate = _tilted_tail(-pools.alt_stat, n, -T, False, pools.theta2, trials, rng)
        beta = estimate if estimate > 0.0 else floor
    return alpha, beta


def _theoretical_columns(null_diffs: DifferenceSample, alt_diffs: DifferenceSample, T: float):
    """-φ*(T) for both error kinds, with the θ maximisers used for tilting."""
    r1 = type1_exponent_empirical(null_diffs, T)
    r2 = type2_exponent_empirical(alt_diffs, T)
    theo1 = -math.inf if r1.unbounded else -r1.exponent
    theo2 = -math.inf if r2.unbounded else -r2.exponent
    theta1 = 0.0 if r1.unbounded else r1.theta_star
    theta2 = 0.0 if r2.unbounded else r2.theta_star
    return (theo1, theo2), (theta1, theta2)


def _run_sweep(
    pools: _Pools,
    cfg: SweepConfig,
    T: float,
    theoretical: Tuple[float, float],
    test: str,
    rates=None,
) -> ErrorSweepTable:
    if cfg.estimator == "tilted":
        rates = rates or (lambda n, rng: _tilted_rates(pools, n, T, cfg.trials_per_n, rng))
    else:
        rates = rates or (lambda n, rng: _plain_rates(pools.null_stat, pools.alt_stat, n, T, cfg.trials_per_n, rng))

    def cell(task):
        run, n = task
        alpha, beta = rates(n, substream(cfg.seed, test, run, n))
        sweep_logger.debug(f"[SWEEP] {test} run={run} n={n} alpha={alpha:.4g} beta={beta:.4g}")
        return {
            "run": run,
            "n": n,
            "alpha": alpha,
            "beta": beta,
            "emp_exp1": math.log(alpha) / n,
            "emp_exp2": math.log(beta) / n,
            "theo_exp1": theoretical[0],
            "theo_exp2": theoretical[1],
        }

    tasks = [(run, n) for run in range(cfg.runs) for n in cfg.n_list]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(cell, tasks))
    else:
        rows = [cell(t) for t in tasks]
    rows.sort(key=lambda r: (r["run"], r["n"]))

    sweep_logger.info(
        f"[SWEEP] {test}: {cfg.runs} run(s) x {len(cfg.n_list)} sizes, {cfg.trials_per_n} trials, "
        f"T={T:.6g}, estimator={cfg.estimator}"
    )
    return ErrorSweepTable(
        rows=rows,
        threshold=T,
        test=test,
        estimator=cfg.estimator,
        smoothing_floor=1.0 / (cfg.trials_per_n + 1),
        metadata={"n_list": list(cfg.n_list), "trials_per_n": cfg.trials_per_n, "runs": cfg.runs, "seed": cfg.seed},
    )


def empirical_error_sweep(
    null_pool,
    alt_pool,
    model0: ScoreModel,
    model1: ScoreModel,
    cfg: SweepConfig,
    theoretical: Optional[Tuple[float, float]] = None,
    cache: bool = True,
) -> ErrorSweepTable:
    """HST error rates for every (run, n) by resampling the pools with replacement.

    `theoretical` overrides the (-φ*₁, -φ*₂) columns (e.g. Gaussian closed
    forms); otherwise they come from the pools' own Legendre transforms.
    With `cache=False` the scores are recomputed on each resampled batch.
    """
    null_diffs, alt_diffs = difference_pools(model0, model1, null_pool, alt_pool)
    T = cfg.threshold if cfg.threshold is not None else choose_threshold(null_diffs, alt_diffs).threshold
    theo, thetas = _theoretical_columns(null_diffs, alt_diffs, T)
    pools = _Pools(null_diffs.values, -alt_diffs.values, *thetas)

    rates = None
    if not cache:
        null_points = model0.as_sample(null_pool)
        alt_points = model0.as_sample(alt_pool)

        def _means(points, n, rng):
            idx = rng.integers(0, len(points), size=(cfg.trials_per_n, n))
            batch = points[idx.ravel()]
            stat = hyvarinen_scores(model0, batch) - hyvarinen_scores(model1, batch)
            return stat.reshape(cfg.trials_per_n, n).mean(axis=1)

        def rates(n, rng):
            if cfg.estimator != "plain":
                raise InputError("score recomputation is only supported with the plain estimator")
            false_alarms = int(np.count_nonzero(_means(null_points, n, rng) > T))
            misses = int(np.count_nonzero(_means(alt_points, n, rng) <= T))
            return (false_alarms + 1) / (cfg.trials_per_n + 1), (misses + 1) / (cfg.trials_per_n + 1)

    table = _run_sweep(pools, cfg, T, theoretical or theo, "hst", rates)
    table.metadata["threshold_range"] = asdict(threshold_range(null_diffs, alt_diffs))
    return table


def lrt_error_sweep(
    null_pool,
    alt_pool,
    model0: ScoreModel,
    model1: ScoreModel,
    cfg: SweepConfig,
    T_L: Optional[float] = None,
    theoretical: Optional[Tuple[float, float]] = None,
) -> ErrorSweepTable:
    """Same harness for the per-sample log-likelihood ratio; T_L defaults to the KL midpoint."""
    null_llr = log_likelihood_ratios(model0, model1, null_pool)
    alt_llr = log_likelihood_ratios(model0, model1, alt_pool)
    if T_L is None:
        T_L = 0.5 * (float(null_llr.mean()) + float(alt_llr.mean()))
    null_sample = DifferenceSample(null_llr, Hypothesis.NULL)
    alt_sample = DifferenceSample(-alt_llr, Hypothesis.ALTERNATIVE)
    theo, thetas = _theoretical_columns(null_sample, alt_sample, T_L)
    return _run_sweep(_Pools(null_llr, alt_llr, *thetas), cfg, T_L, theoretical or theo, "lrt")


# =====================
# MATCHED-ALPHA COMPARISON
# =====================
@dataclass(frozen=True)
class MatchedComparison:
    n: int
    alpha_target: float
    hst_threshold: float
    lrt_threshold: float
    hst_alpha: float
    lrt_alpha: float
    hst_beta: float
    lrt_beta: float
    hst_beta_se: float
    lrt_beta_se: float

    @property
    def pooled_se(self) -> float:
        return math.sqrt(self.hst_beta_se ** 2 + self.lrt_beta_se ** 2)

    @property
    def lrt_dominates(self) -> bool:
        return self.lrt_beta <= self.hst_beta + 3.0 * self.pooled_se


def _matched(null_means: np.ndarray, alt_means: np.ndarray, alpha: float) -> Tuple[float, float, float, float]:
    T = float(np.quantile(null_means, 1.0 - alpha, method="higher"))
    a = float(np.mean(null_means > T))
    b = float(np.mean(alt_means <= T))
    return T, a, b, math.sqrt(max(b * (1.0 - b), 1e-300) / null_means.size)


def matched_alpha_comparison(
    null_pool,
    alt_pool,
    model0: ScoreModel,
    model1: ScoreModel,
    n: int,
    trials: int,
    alpha: float,
    seed: int,
) -> MatchedComparison:
    """Tune HST and LRT to the same empirical α at size n and compare their β̂.

    Both tests see the same resampled index sets.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    null_d, alt_d = difference_pools(model0, model1, null_pool, alt_pool)
    null_llr = log_likelihood_ratios(model0, model1, null_pool)
    alt_llr = log_likelihood_ratios(model0, model1, alt_pool)

    rng = substream(seed, "matched", n)
    null_idx = rng.integers(0, null_llr.size, size=(trials, n))
    alt_idx = rng.integers(0, alt_llr.size, size=(trials, n))

    hst = _matched(null_d.values[null_idx].mean(axis=1), (-alt_d.values)[alt_idx].mean(axis=1), alpha)
    lrt = _matched(null_llr[null_idx].mean(axis=1), alt_llr[alt_idx].mean(axis=1), alpha)
    result = MatchedComparison(n, alpha, hst[0], lrt[0], hst[1], lrt[1], hst[2], lrt[2], hst[3], lrt[3])
    sweep_logger.info(
        f"[MATCHED] n={n} alpha={alpha}: beta_hst={result.hst_beta:.4g} beta_lrt={result.lrt_beta:.4g}"
    )
    return result
