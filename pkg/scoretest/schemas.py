from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Optional, List, Dict, Literal, Union, Annotated

from scoretest.config import (
    DEFAULT_SEED,
    HMC_PATH_LENGTH,
    MC_SAMPLES_GAUSSIAN,
    SIGMA_PTB,
    SWEEP_N_LIST,
    SWEEP_POOL_SIZE,
    SWEEP_RUNS,
    SWEEP_TRIALS,
    SWEEP_WORKERS,
    TAU_PTB,
    TRAIN_BATCH_SIZE,
    TRAIN_EPOCHS,
    TRAIN_LEARNING_RATE,
    UNKNOWN_MAX_COUNT,
)


# =====================
# MODEL FILE SCHEMAS
# =====================
class GaussianSpec(BaseModel):
    """Multivariate normal N(mean, cov)"""
    type: Literal["gaussian"] = "gaussian"
    mean: List[float]
    cov: List[List[float]]


class QuarticSpec(BaseModel):
    """Quartic exponential family with parameter tau in dimension d"""
    type: Literal["quartic"] = "quartic"
    tau: float = Field(gt=0)
    d: int = Field(ge=1)


class RbmSpec(BaseModel):
    """Gauss-Bernoulli RBM; W is d_x rows by d_h columns"""
    type: Literal["rbm"] = "rbm"
    W: List[List[float]]
    b: List[float]
    c: List[float]


ModelSpec = Annotated[Union[GaussianSpec, QuarticSpec, RbmSpec], Field(discriminator="type")]
ModelRef = Union[GaussianSpec, QuarticSpec, RbmSpec, str]


# =====================
# RUN CONFIGURATION
# =====================
class ChainConfig(BaseModel):
    """MCMC settings; `None` picks the per-sampler default (or tunes the step size)"""
    burn_in: Optional[int] = Field(default=None, ge=0)
    thinning: int = Field(default=1, ge=1)
    step_size: Optional[float] = Field(default=None, gt=0)
    path_length: int = Field(default=HMC_PATH_LENGTH, ge=1)
    n_chains: int = Field(default=1, ge=1)
    seed: int = DEFAULT_SEED


class SweepConfig(BaseModel):
    """Resampling harness settings for empirical error exponents"""
    n_list: List[int] = Field(default_factory=lambda: list(SWEEP_N_LIST))
    trials_per_n: int = Field(default=SWEEP_TRIALS, ge=1)
    pool_size: int = Field(default=SWEEP_POOL_SIZE, ge=1)
    threshold: Optional[float] = None
    runs: int = Field(default=SWEEP_RUNS, ge=1)
    seed: int = DEFAULT_SEED
    estimator: Literal["plain", "tilted"] = "plain"
    workers: int = Field(default=SWEEP_WORKERS, ge=1)

    @field_validator("n_list")
    @classmethod
    def _sorted_positive(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("n_list must be a non-empty list of positive integers")
        if list(value) != sorted(value):
            raise ValueError("n_list must be sorted ascending")
        return value


class TrainConfig(BaseModel):
    """Score-matching fit of a Gauss-Bernoulli RBM"""
    epochs: int = Field(default=TRAIN_EPOCHS, ge=1)
    batch_size: int = Field(default=TRAIN_BATCH_SIZE, ge=1)
    learning_rate: float = Field(default=TRAIN_LEARNING_RATE, gt=0)
    hidden: Optional[int] = Field(default=None, ge=1)
    init: Optional[Union[RbmSpec, str]] = None
    seed: int = DEFAULT_SEED
    N: Optional[int] = Field(default=None, ge=1)
    freeze: List[Literal["W", "b", "c"]] = Field(default_factory=list)
    ensemble_size: int = Field(default=1, ge=1)


class PerturbSpec(BaseModel):
    """How the alternative is derived from the null model"""
    target: Literal["mean", "cov", "tau", "W"]
    sigma_ptb: float = Field(default=SIGMA_PTB, gt=0)
    tau_ptb: float = TAU_PTB
    cov_mode: Literal["multiplicative", "additive"] = "multiplicative"


class PoolSpec(BaseModel):
    """Where null/alternative pools come from: a sampler, or CSV sample dumps"""
    sampler: Literal["auto", "exact", "mala", "hmc", "gibbs"] = "auto"
    chain: ChainConfig = Field(default_factory=ChainConfig)
    null_csv: Optional[str] = None
    alternative_csv: Optional[str] = None


class AlternativeFitSpec(BaseModel):
    """Fit the alternative RBM on N samples, cold-started from the null"""
    train: TrainConfig = Field(default_factory=TrainConfig)
    data_csv: Optional[str] = None


class ExperimentConfig(BaseModel):
    """Everything `exponent` and `sweep` need; embedded verbatim in every output"""
    null: ModelRef
    alternative: Optional[ModelRef] = None
    perturbation: Optional[PerturbSpec] = None
    alternative_fit: Optional[AlternativeFitSpec] = None
    pools: PoolSpec = Field(default_factory=PoolSpec)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    threshold_policy: str = "midpoint"
    tests: List[Literal["hst", "lrt"]] = Field(default_factory=lambda: ["hst"])
    exponent_samples: int = Field(default=MC_SAMPLES_GAUSSIAN, ge=1)
    output_dir: str = "outputs"
    seed: int = DEFAULT_SEED

    @field_validator("threshold_policy")
    @classmethod
    def _known_policy(cls, value: str) -> str:
        if value in ("midpoint", "n1-balance"):
            return value
        if value.startswith("fixed:"):
            float(value.split(":", 1)[1])
            return value
        raise ValueError("threshold_policy must be midpoint, n1-balance or fixed:<T>")

    @model_validator(mode="after")
    def _alternative_source(self):
        if self.alternative is None and self.perturbation is None:
            raise ValueError("give either an explicit alternative model or a perturbation")
        return self


class IngestSchema(BaseModel):
    """Column index -> role for CSV ingestion"""
    columns: Dict[int, Literal["continuous", "label", "categorical", "drop"]]
    header: bool = False
    null_label: str = "normal"
    named_attacks: List[str] = Field(default_factory=list)
    unknown_max: int = Field(default=UNKNOWN_MAX_COUNT, ge=0)
    one_hot: bool = False


# =====================
# HTTP SCHEMAS
# =====================
class CheckRequest(BaseModel):
    """Request schema for a derivative check"""
    model: ModelSpec
    probes: int = Field(default=20, ge=1)
    seed: int = DEFAULT_SEED

    class Config:
        json_schema_extra = {
            "example": {
                "model": {"type": "quartic", "tau": 1.0, "d": 2},
                "probes": 20,
                "seed": 0
            }
        }


class CheckResponse(BaseModel):
    """Worst relative errors over all probe points"""
    passed: bool
    grad_rel_error: float
    laplacian_rel_error: float
    probes: int


class GaussianExponentRequest(BaseModel):
    """Shared-covariance Gaussian pair N(0, cov) vs N(mean_shift, cov)"""
    cov: List[List[float]]
    mean_shift: List[float]
    T: float
    convention: Literal["corrected", "published"] = "corrected"

    class Config:
        json_schema_extra = {
            "example": {
                "cov": [[1.0, 0.0], [0.0, 1.0]],
                "mean_shift": [1.0, 0.0],
                "T": 0.0
            }
        }


class ThresholdRangeResponse(BaseModel):
    lo: float
    hi: float
    degenerate: bool


class GaussianExponentResponse(BaseModel):
    """Closed-form type-I/type-II exponents at T"""
    T: float
    type1_exponent: float
    type2_exponent: float
    threshold_range: ThresholdRangeResponse
    convention: str

    class Config:
        json_schema_extra = {
            "example": {
                "T": 0.0,
                "type1_exponent": 0.125,
                "type2_exponent": 0.125,
                "threshold_range": {"lo": -0.5, "hi": 0.5, "degenerate": False},
                "convention": "corrected"
            }
        }


class EmpiricalExponentRequest(BaseModel):
    """Score differences S(x,p_null)-S(x,p_alt) under the null and S(x,p_alt)-S(x,p_null) under the alternative"""
    null_diffs: List[float] = Field(min_length=1)
    alt_diffs: List[float] = Field(min_length=1)
    T: float


class ExponentReport(BaseModel):
    """Serialized ExponentResult"""
    error_kind: Literal["type1", "type2"]
    T: float
    theta_star: float
    exponent: float
    unbounded: bool
    m: int


class EmpiricalExponentResponse(BaseModel):
    type1: ExponentReport
    type2: ExponentReport
    threshold_range: ThresholdRangeResponse
