import numpy as np
from fastapi import APIRouter

from scoretest.errors import InputError
from scoretest.logger import api_logger
from scoretest.models.gaussian import GaussianParams
from scoretest.schemas import (
    EmpiricalExponentRequest,
    EmpiricalExponentResponse,
    GaussianExponentRequest,
    GaussianExponentResponse,
    ThresholdRangeResponse,
)
from scoretest.services.exponent_service import (
    gaussian_threshold_range,
    gaussian_type1_exponent,
    gaussian_type2_exponent,
    threshold_range,
    type1_exponent_empirical,
    type2_exponent_empirical,
)
from scoretest.services.score_service import DifferenceSample, Hypothesis

router = APIRouter(tags=["Exponent"])


@router.post(
    "/gaussian",
    response_model=GaussianExponentResponse,
    summary="Closed-form Gaussian exponents",
    description="Type-I and type-II error exponents of the score test for N(0, cov) against N(mean_shift, cov)"
)
def gaussian_exponent(request: GaussianExponentRequest):
    """
    Closed-form error exponents for a shared-covariance Gaussian pair.

    **Request Body:**
    - `cov`: Shared covariance matrix (symmetric positive definite)
    - `mean_shift`: Alternative mean minus null mean
    - `T`: Test threshold
    - `convention`: `corrected` (default) or `published` for the type-I display as published

    **Returns:** Both exponents and the interval of thresholds where both are positive
    """
    params = GaussianParams(mean=np.zeros(len(request.mean_shift)), cov=request.cov)
    interval = gaussian_threshold_range(params, request.mean_shift)
    if interval.degenerate:
        raise InputError("mean_shift is zero: the two hypotheses coincide")
    api_logger.info(f"[EXPONENT] gaussian d={params.dim} T={request.T}")
    return GaussianExponentResponse(
        T=request.T,
        type1_exponent=gaussian_type1_exponent(params, request.mean_shift, request.T, convention=request.convention),
        type2_exponent=gaussian_type2_exponent(params, request.mean_shift, request.T),
        threshold_range=ThresholdRangeResponse(lo=interval.lo, hi=interval.hi, degenerate=interval.degenerate),
        convention=request.convention,
    )


@router.post(
    "/empirical",
    response_model=EmpiricalExponentResponse,
    summary="Exponents from score differences",
    description="Legendre transforms of the empirical log-MGFs of null and alternative score differences"
)
def empirical_exponent(request: EmpiricalExponentRequest):
    """
    Chernoff exponents estimated from samples of score differences.

    **Request Body:**
    - `null_diffs`: S(x, p_null) - S(x, p_alt) at points drawn under the null
    - `alt_diffs`: S(x, p_alt) - S(x, p_null) at points drawn under the alternative
    - `T`: Test threshold

    **Returns:** Type-I and type-II exponent reports and the estimated threshold range
    """
    null_diffs = DifferenceSample(np.asarray(request.null_diffs), Hypothesis.NULL)
    alt_diffs = DifferenceSample(np.asarray(request.alt_diffs), Hypothesis.ALTERNATIVE)
    interval = threshold_range(null_diffs, alt_diffs)
    api_logger.info(f"[EXPONENT] empirical m={null_diffs.size}/{alt_diffs.size} T={request.T}")
    return EmpiricalExponentResponse(
        type1=type1_exponent_empirical(null_diffs, request.T).to_report(),
        type2=type2_exponent_empirical(alt_diffs, request.T).to_report(),
        threshold_range=ThresholdRangeResponse(lo=interval.lo, hi=interval.hi, degenerate=interval.degenerate),
    )
