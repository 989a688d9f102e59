"""Command-line entry point: `python -m scoretest <command> ...`."""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from scoretest.artifacts import read_samples_csv, write_exponent_curve, write_json, write_loss_curve
from scoretest.config import API_HOST, API_PORT, DEFAULT_SEED, FD_PROBES, FD_TOLERANCE, SIGMA_PTB, TAU_PTB
from scoretest.errors import (
    CapabilityError,
    DataError,
    InputError,
    NumericError,
    ScoreTestError,
    TrainingError,
)
from scoretest.logger import cli_logger, configure_logging
from scoretest.models import load_model_spec, save_model_spec
from scoretest.schemas import ExperimentConfig, IngestSchema, PerturbSpec, TrainConfig
from scoretest.services.experiment_service import load_experiment_config, perturb_model, run_exponent, run_sweep
from scoretest.services.ingest_service import (
    AttackSpec,
    compare_label_counts,
    ingest_csv,
    prepare_splits,
    write_splits,
)
from scoretest.services.sampler_service import mode_proxy
from scoretest.services.score_service import probe_derivatives
from scoretest.services.training_service import score_matching_fit

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_IO = 3


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (NumericError, TrainingError)):
        return EXIT_NUMERIC
    if isinstance(exc, (InputError, CapabilityError, DataError, ValidationError, ScoreTestError, ValueError)):
        return EXIT_VALIDATION
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_VALIDATION


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=float))


# =====================
# COMMANDS
# =====================
def cmd_check(args) -> int:
    loaded = load_model_spec(args.model)
    report = probe_derivatives(loaded.model, args.probes, args.seed, center=mode_proxy(loaded))
    passed = report.passed(FD_TOLERANCE)
    _emit({
        "model": args.model,
        "passed": passed,
        "grad_rel_error": report.grad_rel_error,
        "laplacian_rel_error": report.laplacian_rel_error,
        "probes": args.probes,
        "seed": args.seed,
    })
    if not passed:
        cli_logger.error(f"[CHECK] {args.model}: derivative check failed (tolerance {FD_TOLERANCE:g})")
        return EXIT_NUMERIC
    return EXIT_OK


def _experiment(args):
    config, base_dir = load_experiment_config(args.config)
    data = config.model_dump()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_dir"] = args.out
    if args.threshold_policy is not None:
        data["threshold_policy"] = args.threshold_policy
    sweep = data["sweep"]
    for flag, key in (("n_list", "n_list"), ("trials", "trials_per_n"), ("pool_size", "pool_size"),
                      ("runs", "runs"), ("estimator", "estimator"), ("workers", "workers")):
        value = getattr(args, flag, None)
        if value is not None:
            sweep[key] = value
    if getattr(args, "train_n", None) is not None:
        if data.get("alternative_fit") is None:
            raise InputError("--train-n needs an alternative_fit section in the config")
        data["alternative_fit"]["train"]["N"] = args.train_n
    return ExperimentConfig.model_validate(data), base_dir


def cmd_exponent(args) -> int:
    config, base_dir = _experiment(args)
    report = run_exponent(config, base_dir)
    curve = report.pop("curve", None)
    path = write_json(Path(config.output_dir) / "exponent.json", report)
    if curve:
        write_exponent_curve(Path(config.output_dir) / "exponent_curve.csv", curve)
    cli_logger.info(f"[EXPONENT] report written to {path}")
    _emit({"type1": report["type1"], "type2": report["type2"], "threshold_range": report["threshold_range"]})
    return EXIT_OK


def cmd_sweep(args) -> int:
    config, base_dir = _experiment(args)
    outcome = run_sweep(config, base_dir)
    paths = outcome.write(config.output_dir)
    cli_logger.info(f"[SWEEP] wrote {', '.join(str(p) for p in paths)}")
    return EXIT_OK


def cmd_train_rbm(args) -> int:
    data = read_samples_csv(args.data)
    cfg = TrainConfig.model_validate(json.loads(Path(args.config).read_text(encoding="utf-8"))) if args.config else TrainConfig()
    updates = {
        key: value
        for key, value in (
            ("hidden", args.hidden), ("init", args.init), ("N", args.train_n), ("epochs", args.epochs),
            ("learning_rate", args.learning_rate), ("batch_size", args.batch_size), ("seed", args.seed),
        )
        if value is not None
    }
    cfg = TrainConfig.model_validate({**cfg.model_dump(), **updates})
    out = Path(args.out)
    try:
        result = score_matching_fit(data, cfg)
    except TrainingError as e:
        write_loss_curve(out / "loss.csv", e.curve)
        raise
    save_model_spec(out / "model.json", result.params)
    write_loss_curve(out / "loss.csv", result.curve)
    write_json(out / "train.json", {
        "seed": cfg.seed,
        "config": cfg.model_dump(),
        "initial_objective": result.initial_objective,
        "final_objective": result.final_objective,
        "rows": int(len(data)),
    })
    cli_logger.info(f"[TRAIN] model written to {out / 'model.json'}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    schema = IngestSchema.model_validate(json.loads(Path(args.schema).read_text(encoding="utf-8")))
    ds = ingest_csv(args.data, schema)
    spec = AttackSpec(named=list(schema.named_attacks), unknown_max=schema.unknown_max)
    null_label = args.null_label or schema.null_label
    partition = prepare_splits(ds, null_label, spec)
    paths = write_splits(partition, args.out)
    counts = compare_label_counts(ds, spec, null_label)
    write_json(Path(args.out) / "splits.json", {
        "sizes": partition.sizes(),
        "files": {k: str(v) for k, v in paths.items()},
        "label_counts": ds.label_counts(),
        "features": partition.null.feature_names,
        "standardization": {
            "mean": partition.null.stats.mean,
            "std": partition.null.stats.std,
        },
        "published_counts": counts.to_dict(orient="records"),
    })
    _emit(partition.sizes())
    return EXIT_OK


def cmd_perturb(args) -> int:
    null = load_model_spec(args.model, normalize=False)
    spec = PerturbSpec(target=args.target, sigma_ptb=args.sigma_ptb, tau_ptb=args.tau_ptb, cov_mode=args.cov_mode)
    alternative = perturb_model(null, spec, args.seed)
    save_model_spec(args.out, alternative.params)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("scoretest.main:app", host=args.host, port=args.port)
    return EXIT_OK


# =====================
# PARSER
# =====================
def _n_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n-list expects comma-separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scoretest", description="Score-based hypothesis testing and error exponents")
    parser.add_argument("--log-level", default=None, help="override LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="finite-difference check of a model file's score and Laplacian")
    p.add_argument("model")
    p.add_argument("--probes", type=int, default=FD_PROBES)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_check)

    for name, func, helptext in (
        ("exponent", cmd_exponent, "type-I/type-II exponents from an experiment config"),
        ("sweep", cmd_sweep, "empirical error-exponent sweep over test sizes"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--threshold-policy")
        p.add_argument("--n-list", type=_n_list)
        p.add_argument("--trials", type=int)
        p.add_argument("--pool-size", type=int)
        p.add_argument("--runs", type=int)
        p.add_argument("--train-n", type=int)
        p.add_argument("--estimator", choices=["plain", "tilted"])
        p.add_argument("--workers", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("train-rbm", help="score-matching fit of a Gauss-Bernoulli RBM")
    p.add_argument("--data", required=True, help="sample-dump CSV (x0,...,x{d-1})")
    p.add_argument("--config", help="TrainConfig JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--hidden", type=int)
    p.add_argument("--init", help="RBM model file to cold-start from")
    p.add_argument("--train-n", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_rbm)

    p = sub.add_parser("ingest", help="ingest a KDD-style CSV and write standardised splits")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--null-label")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("perturb", help="write an alternative model by perturbing a null model")
    p.add_argument("--model", required=True)
    p.add_argument("--target", required=True, choices=["mean", "cov", "tau", "W"])
    p.add_argument("--sigma-ptb", type=float, default=SIGMA_PTB)
    p.add_argument("--tau-ptb", type=float, default=TAU_PTB)
    p.add_argument("--cov-mode", choices=["multiplicative", "additive"], default="multiplicative")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default=API_HOST)
    p.add_argument("--port", type=int, default=API_PORT)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        configure_logging(level=args.log_level.upper())
    else:
        configure_logging()
    try:
        return args.func(args)
    except Exception as e:
        code = exit_code_for(e)
        kind = getattr(e, "kind", type(e).__name__)
        cli_logger.error(f"[{args.command.upper()}] {kind}: {e}")
        if isinstance(e, DataError) and e.bad_rows:
            cli_logger.error(f"[{args.command.upper()}] first bad rows: {e.bad_rows[:5]}")
        return code


if __name__ == "__main__":
    sys.exit(main())
