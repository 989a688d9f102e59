"""
Experiment Service

Turns an ExperimentConfig into models, sample pools and results: resolves
the null and alternative (explicit, perturbed, or score-matching fitted),
draws or loads the pools, and runs the exponent report or the error sweep.
"""

from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from scoretest.artifacts import read_json, read_samples_csv, write_json
from scoretest.config import EXPONENT_CURVE_POINTS
from scoretest.errors import InputError
from scoretest.logger import logger
from scoretest.models import LoadedModel, build_model, load_model_spec
from scoretest.models.gaussian import GaussianParams
from scoretest.models.perturb import (
    perturb_gaussian_cov,
    perturb_gaussian_mean,
    perturb_quartic_tau,
    perturb_rbm_weights,
)
from scoretest.models.quartic import QuarticExpFamilyParams
from scoretest.models.rbm import RbmParams
from scoretest.schemas import ExperimentConfig, PerturbSpec
from scoretest.seeding import derive_seed, substream
from scoretest.services.exponent_service import (
    exponent_curve,
    gaussian_exact_errors,
    gaussian_lrt_exponents,
    gaussian_threshold_range,
    gaussian_type1_exponent,
    gaussian_type2_exponent,
    threshold_range,
    type1_exponent_empirical,
    type2_exponent_empirical,
)
from scoretest.services.sampler_service import draw_pool
from scoretest.services.testing_service import (
    ErrorSweepTable,
    choose_threshold,
    difference_pools,
    empirical_error_sweep,
    lrt_error_sweep,
)
from scoretest.services.training_service import fit_alternative_ensemble, select_alternative


@dataclass
class ExperimentSetup:
    """Resolved models: `alternative` is what the tests use, `alternative_source` what alternative data come from."""

    config: ExperimentConfig
    null: LoadedModel
    alternative: LoadedModel
    alternative_source: LoadedModel
    fit: Dict = field(default_factory=dict)


def load_experiment_config(path: Union[str, Path]) -> Tuple[ExperimentConfig, Path]:
    """Parse a JSON experiment config; returns it with the directory relative paths resolve against."""
    try:
        config = ExperimentConfig.model_validate(read_json(path))
    except ValidationError as e:
        raise InputError(f"invalid experiment config {path}: {e}")
    return config, Path(path).resolve().parent


def _resolve_path(ref: str, base_dir: Optional[Path]) -> Path:
    path = Path(ref)
    if not path.is_absolute() and base_dir is not None and (base_dir / path).exists():
        return base_dir / path
    return path


def resolve_model(ref, base_dir: Optional[Path] = None) -> LoadedModel:
    if isinstance(ref, str):
        return load_model_spec(_resolve_path(ref, base_dir))
    return load_model_spec(ref)


def perturb_model(null: LoadedModel, spec: PerturbSpec, seed: int) -> LoadedModel:
    """Alternative built by one perturbation of the null's parameters."""
    rng = substream(seed, "perturb", spec.target)
    params = null.params
    if spec.target in ("mean", "cov") and isinstance(params, GaussianParams):
        if spec.target == "mean":
            return build_model(perturb_gaussian_mean(params, rng, spec.sigma_ptb))
        return build_model(perturb_gaussian_cov(params, rng, spec.sigma_ptb, spec.cov_mode))
    if spec.target == "tau" and isinstance(params, QuarticExpFamilyParams):
        return build_model(perturb_quartic_tau(params, spec.tau_ptb))
    if spec.target == "W" and isinstance(params, RbmParams):
        return build_model(perturb_rbm_weights(params, rng, spec.sigma_ptb))
    raise InputError(f"cannot perturb '{spec.target}' of a {null.family} model")


def setup_experiment(config: ExperimentConfig, base_dir: Optional[Path] = None) -> ExperimentSetup:
    null = resolve_model(config.null, base_dir)
    if config.alternative is not None:
        source = resolve_model(config.alternative, base_dir)
    else:
        source = perturb_model(null, config.perturbation, config.seed)
    if source.model.dim != null.model.dim:
        raise InputError(f"null has dimension {null.model.dim} but alternative has {source.model.dim}")

    alternative, fit = source, {}
    if config.alternative_fit is not None:
        alternative, fit = _fit_alternative(config, null, source, base_dir)
    logger.info(f"[EXPERIMENT] null={null.model.name} alternative={alternative.model.name} seed={config.seed}")
    return ExperimentSetup(config, null, alternative, source, fit)


def _fit_alternative(config: ExperimentConfig, null: LoadedModel, source: LoadedModel, base_dir):
    spec = config.alternative_fit
    train = spec.train.model_copy(update={"seed": derive_seed(config.seed, "alternative-fit")})
    if spec.data_csv is not None:
        data = read_samples_csv(_resolve_path(spec.data_csv, base_dir))
    else:
        n_data = train.N or config.sweep.pool_size
        data = draw_pool(source, n_data, config.pools.sampler, _chain(config, "train-data"))
    init = null.params if isinstance(null.params, RbmParams) and train.init is None else None
    ensemble = fit_alternative_ensemble(data, train, init=init)
    selected = select_alternative(ensemble, config.seed)
    chosen = ensemble[selected]
    fit = {
        "N": train.N or int(len(data)),
        "ensemble_size": len(ensemble),
        "selected": selected,
        "initial_objective": chosen.initial_objective,
        "final_objective": chosen.final_objective,
    }
    return build_model(chosen.params), fit


def _chain(config: ExperimentConfig, key: str):
    return config.pools.chain.model_copy(update={"seed": derive_seed(config.seed, "pool", key)})


def draw_pools(setup: ExperimentSetup, size: int, base_dir: Optional[Path] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Null pool from the null model, alternative pool from the alternative's source (or the CSV dumps)."""
    pools = setup.config.pools
    if pools.null_csv is not None:
        null_pool = read_samples_csv(_resolve_path(pools.null_csv, base_dir))
    else:
        null_pool = draw_pool(setup.null, size, pools.sampler, _chain(setup.config, "null"))
    if pools.alternative_csv is not None:
        alt_pool = read_samples_csv(_resolve_path(pools.alternative_csv, base_dir))
    else:
        alt_pool = draw_pool(setup.alternative_source, size, pools.sampler, _chain(setup.config, "alternative"))
    return null_pool, alt_pool


def gaussian_shift(setup: ExperimentSetup) -> Optional[np.ndarray]:
    """μ_alt - μ_null when both test models are Gaussians sharing one covariance."""
    p0, p1 = setup.null.params, setup.alternative.params
    if isinstance(p0, GaussianParams) and isinstance(p1, GaussianParams) and np.allclose(p0.cov, p1.cov, atol=0, rtol=1e-12):
        return np.asarray(p1.mean - p0.mean)
    return None


# =====================
# COMMANDS
# =====================
def run_exponent(config: ExperimentConfig, base_dir: Optional[Path] = None) -> Dict:
    """Type-I/type-II exponents at the policy threshold from m fresh draws per hypothesis."""
    try:
        setup = setup_experiment(config, base_dir)
        null_pool, alt_pool = draw_pools(setup, config.exponent_samples, base_dir)
        null_diffs, alt_diffs = difference_pools(setup.null.model, setup.alternative.model, null_pool, alt_pool)
        interval = threshold_range(null_diffs, alt_diffs)

        if interval.degenerate and not config.threshold_policy.startswith("fixed:"):
            choice = {"threshold": 0.0, "policy": config.threshold_policy, "separable": False}
        else:
            picked = choose_threshold(null_diffs, alt_diffs, config.threshold_policy)
            choice = {"threshold": picked.threshold, "policy": picked.policy, "separable": picked.separable}
        T = choice["threshold"]

        report = {
            "seed": config.seed,
            "config": config.model_dump(),
            "threshold": choice,
            "threshold_range": {"lo": interval.lo, "hi": interval.hi, "degenerate": interval.degenerate},
            "type1": type1_exponent_empirical(null_diffs, T).to_report().model_dump(),
            "type2": type2_exponent_empirical(alt_diffs, T).to_report().model_dump(),
        }
        if setup.fit:
            report["alternative_fit"] = setup.fit
        if not interval.degenerate:
            grid = np.linspace(interval.lo, interval.hi, EXPONENT_CURVE_POINTS)
            report["curve"] = exponent_curve(null_diffs, alt_diffs, grid).to_dict(orient="records")

        shift = gaussian_shift(setup)
        if shift is not None:
            exact = gaussian_threshold_range(setup.null.params, shift)
            report["closed_form"] = {
                "type1": gaussian_type1_exponent(setup.null.params, shift, T),
                "type2": gaussian_type2_exponent(setup.null.params, shift, T),
                "published_type1": gaussian_type1_exponent(setup.null.params, shift, T, convention="published"),
                "threshold_range": {"lo": exact.lo, "hi": exact.hi, "degenerate": exact.degenerate},
            }
        logger.info(
            f"[EXPONENT] T={T:.6g} type1={report['type1']['exponent']:.6g} type2={report['type2']['exponent']:.6g}"
        )
        return report

    except Exception:
        logger.exception("Exponent computation failed")
        raise


@dataclass
class SweepOutcome:
    tables: Dict[str, ErrorSweepTable]
    metadata: Dict

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        out_dir = Path(out_dir)
        paths = []
        for test, table in self.tables.items():
            name = "sweep.csv" if test == "hst" else f"sweep_{test}.csv"
            paths.append(table.write_csv(out_dir / name))
        paths.append(write_json(out_dir / "metadata.json", self.metadata))
        return paths


def run_sweep(config: ExperimentConfig, base_dir: Optional[Path] = None) -> SweepOutcome:
    """Error sweeps for the configured tests; theoretical columns use Gaussian closed forms when they apply."""
    try:
        setup = setup_experiment(config, base_dir)
        null_pool, alt_pool = draw_pools(setup, config.sweep.pool_size, base_dir)
        model0, model1 = setup.null.model, setup.alternative.model

        sweep_cfg = config.sweep.model_copy(update={"seed": derive_seed(config.seed, "sweep")})
        if sweep_cfg.threshold is not None:
            choice = {"threshold": sweep_cfg.threshold, "policy": "fixed", "separable": False}
        else:
            null_diffs, alt_diffs = difference_pools(model0, model1, null_pool, alt_pool)
            picked = choose_threshold(null_diffs, alt_diffs, config.threshold_policy)
            choice = {"threshold": picked.threshold, "policy": picked.policy, "separable": picked.separable}
            sweep_cfg = sweep_cfg.model_copy(update={"threshold": picked.threshold})
        T = choice["threshold"]

        shift = gaussian_shift(setup)
        theoretical = None
        if shift is not None:
            theoretical = (
                -gaussian_type1_exponent(setup.null.params, shift, T),
                -gaussian_type2_exponent(setup.null.params, shift, T),
            )
        tables = {"hst": empirical_error_sweep(null_pool, alt_pool, model0, model1, sweep_cfg, theoretical=theoretical)}

        if "lrt" in config.tests:
            lrt_theory = None
            T_L = None
            if shift is not None:
                T_L = 0.0
                lrt_theory = tuple(-e for e in gaussian_lrt_exponents(setup.null.params, shift, T_L))
            tables["lrt"] = lrt_error_sweep(null_pool, alt_pool, model0, model1, sweep_cfg, T_L=T_L, theoretical=lrt_theory)

        metadata = {
            "seed": config.seed,
            "config": config.model_dump(),
            "threshold": choice,
            "pool_sizes": {"null": int(len(null_pool)), "alternative": int(len(alt_pool))},
            "smoothing_floor": tables["hst"].smoothing_floor,
            "estimator": sweep_cfg.estimator,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        if setup.fit:
            metadata["N"] = setup.fit["N"]
            metadata["alternative_fit"] = setup.fit
        if shift is not None:
            metadata["exact_alpha"] = {
                str(n): gaussian_exact_errors(setup.null.params, shift, T, n)[0] for n in sweep_cfg.n_list
            }
        return SweepOutcome(tables, metadata)

    except Exception:
        logger.exception("Sweep failed")
        raise
