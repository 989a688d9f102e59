import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import TypeAdapter

from scoretest.errors import InputError
from scoretest.logger import models_logger
from scoretest.models.base import ScoreModel
from scoretest.models.gaussian import GaussianParams, gaussian_model
from scoretest.models.quartic import QuarticExpFamilyParams, quartic_log_partition, quartic_model
from scoretest.models.rbm import RbmParams, rbm_log_partition, rbm_model
from scoretest.config import QUAD_MAX_DIM, RBM_EXACT_MAX_HIDDEN
from scoretest.schemas import GaussianSpec, ModelSpec, QuarticSpec, RbmSpec
from scoretest.artifacts import write_json

Params = Union[GaussianParams, QuarticExpFamilyParams, RbmParams]

_spec_adapter = TypeAdapter(ModelSpec)


@dataclass(frozen=True)
class LoadedModel:
    """A validated model file: family tag, parameters and the ScoreModel built from them."""

    family: str
    params: Params
    model: ScoreModel


def build_model(params: Params, normalize: bool = True) -> LoadedModel:
    """Wrap parameters in their ScoreModel.

    With `normalize`, quartic (d <= 3) and small RBMs (d_h <= 12) also get
    an exact normalized log density, which the LRT needs.
    """
    if isinstance(params, GaussianParams):
        return LoadedModel("gaussian", params, gaussian_model(params))
    if isinstance(params, QuarticExpFamilyParams):
        log_z = quartic_log_partition(params).value if normalize and params.d <= QUAD_MAX_DIM else None
        return LoadedModel("quartic", params, quartic_model(params, log_partition=log_z))
    if isinstance(params, RbmParams):
        log_z = rbm_log_partition(params) if normalize and params.d_h <= RBM_EXACT_MAX_HIDDEN else None
        return LoadedModel("rbm", params, rbm_model(params, log_partition=log_z))
    raise InputError(f"unsupported parameter type {type(params).__name__}")


def params_from_spec(spec) -> Params:
    if isinstance(spec, GaussianSpec):
        return GaussianParams(mean=spec.mean, cov=spec.cov)
    if isinstance(spec, QuarticSpec):
        return QuarticExpFamilyParams(tau=spec.tau, d=spec.d)
    if isinstance(spec, RbmSpec):
        try:
            W = np.array(spec.W, dtype=float)
        except ValueError as e:
            raise InputError(f"RBM weight matrix is ragged: {e}")
        return RbmParams(W=W, b=spec.b, c=spec.c)
    raise InputError(f"unsupported model spec {spec!r}")


def spec_from_params(params: Params):
    if isinstance(params, GaussianParams):
        return GaussianSpec(mean=params.mean.tolist(), cov=params.cov.tolist())
    if isinstance(params, QuarticExpFamilyParams):
        return QuarticSpec(tau=float(params.tau), d=int(params.d))
    if isinstance(params, RbmParams):
        return RbmSpec(W=params.W.tolist(), b=params.b.tolist(), c=params.c.tolist())
    raise InputError(f"unsupported parameter type {type(params).__name__}")


def load_model_spec(source: Union[str, Path, dict, GaussianSpec, QuarticSpec, RbmSpec], normalize: bool = True) -> LoadedModel:
    """Load a model from a JSON file path, a dict, or an already-parsed spec."""
    if isinstance(source, (GaussianSpec, QuarticSpec, RbmSpec)):
        spec = source
    else:
        if isinstance(source, (str, Path)):
            models_logger.info(f"[MODEL FILE] Loading {source}")
            with open(source, "r", encoding="utf-8") as fh:
                source = json.load(fh)
        spec = _spec_adapter.validate_python(source)
    return build_model(params_from_spec(spec), normalize=normalize)


def save_model_spec(path: Union[str, Path], params: Params) -> None:
    write_json(path, spec_from_params(params).model_dump())
    models_logger.info(f"[MODEL FILE] Saved {type(params).__name__} to {path}")


__all__ = [
    "LoadedModel",
    "ScoreModel",
    "GaussianParams",
    "QuarticExpFamilyParams",
    "RbmParams",
    "build_model",
    "load_model_spec",
    "save_model_spec",
    "params_from_spec",
    "spec_from_params",
]
