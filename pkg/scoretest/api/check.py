from fastapi import APIRouter

from scoretest.config import FD_TOLERANCE
from scoretest.logger import api_logger
from scoretest.models import load_model_spec
from scoretest.schemas import CheckRequest, CheckResponse
from scoretest.services.sampler_service import mode_proxy
from scoretest.services.score_service import probe_derivatives

router = APIRouter(tags=["Check"])


@router.post(
    "",
    response_model=CheckResponse,
    summary="Finite-difference check of a model",
    description="Compare the analytic score and Laplacian of a model with central differences of its log density"
)
def check(request: CheckRequest):
    """
    Run the derivative check on `probes` random points around the model's mode.

    **Request Body:**
    - `model`: Gaussian, quartic or RBM model spec (discriminated by `type`)
    - `probes`: Number of probe points (default: 20)
    - `seed`: Seed for the probe points

    **Returns:** Worst relative errors and whether both are within tolerance
    """
    loaded = load_model_spec(request.model)
    report = probe_derivatives(loaded.model, request.probes, request.seed, center=mode_proxy(loaded))
    api_logger.info(f"[CHECK] {loaded.model.name}: passed={report.passed(FD_TOLERANCE)}")
    return CheckResponse(
        passed=report.passed(FD_TOLERANCE),
        grad_rel_error=report.grad_rel_error,
        laplacian_rel_error=report.laplacian_rel_error,
        probes=request.probes,
    )
