"""CSV and JSON outputs: sample dumps, sweep tables, loss curves, reports."""

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from scoretest.errors import DataError

PathLike = Union[str, Path]

SWEEP_COLUMNS = ["run", "n", "alpha", "beta", "emp_exp1", "emp_exp2", "theo_exp1", "theo_exp2"]
CURVE_COLUMNS = ["T", "type1_exponent", "type2_exponent", "theta1", "theta2", "unbounded"]


def _ensure_parent(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(path: PathLike, payload: Mapping) -> Path:
    """Write JSON via a temp file and atomic rename."""
    path = _ensure_parent(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def read_json(path: PathLike) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_samples_csv(path: PathLike, X) -> Path:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    path = _ensure_parent(path)
    pd.DataFrame(X, columns=[f"x{i}" for i in range(X.shape[1])]).to_csv(path, index=False, float_format="%.17g")
    return path


def read_samples_csv(path: PathLike) -> np.ndarray:
    frame = pd.read_csv(path)
    expected = [f"x{i}" for i in range(frame.shape[1])]
    if list(frame.columns) != expected:
        raise DataError(f"{path}: sample dump header must be {','.join(expected)}")
    values = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        bad = sorted(set(np.argwhere(~np.isfinite(values))[:, 0].tolist()))
        raise DataError(f"{path}: non-numeric sample rows {bad[:10]}", bad_rows=[{"row": r} for r in bad])
    return values


def write_sweep_csv(path: PathLike, rows: Iterable[Mapping]) -> Path:
    path = _ensure_parent(path)
    pd.DataFrame(list(rows), columns=SWEEP_COLUMNS).to_csv(path, index=False, float_format="%.10g")
    return path


def write_loss_curve(path: PathLike, curve: Sequence[float]) -> Path:
    path = _ensure_parent(path)
    pd.DataFrame({"epoch": np.arange(len(curve)), "objective": list(curve)}).to_csv(path, index=False, float_format="%.12g")
    return path


def write_exponent_curve(path: PathLike, rows: List[Mapping]) -> Path:
    path = _ensure_parent(path)
    pd.DataFrame(rows, columns=CURVE_COLUMNS).to_csv(path, index=False, float_format="%.10g")
    return path
