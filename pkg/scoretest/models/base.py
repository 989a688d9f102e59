from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from scoretest.errors import CapabilityError, InputError

# Batch-first callables: (m, d) array in, (m, d) or (m,) array out.
BatchFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ScoreModel:
    """A density on R^d known through its score and the trace of its Hessian.

    `grad_log_density` and `laplacian_log_density` are required.
    `log_density` (normalized) and `unnorm_log_density` are optional
    capabilities; calling a missing one raises CapabilityError.
    """

    dim: int
    grad_log_density: BatchFn
    laplacian_log_density: BatchFn
    log_density: Optional[BatchFn] = None
    unnorm_log_density: Optional[BatchFn] = None
    name: str = "model"

    def __post_init__(self):
        if int(self.dim) < 1:
            raise InputError(f"model dimension must be positive, got {self.dim}")

    @property
    def has_log_density(self) -> bool:
        return self.log_density is not None

    @property
    def has_unnorm_log_density(self) -> bool:
        return self.unnorm_log_density is not None or self.log_density is not None

    def as_batch(self, x) -> np.ndarray:
        """Validate `x` as a point or an (m, d) batch and return it 2-D."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise InputError(f"{self.name}: expected points of dimension {self.dim}, got shape {np.shape(x)}")
        return arr

    def as_sample(self, X) -> np.ndarray:
        """Like `as_batch`, but a flat array for a 1-D model is a column of points."""
        arr = np.asarray(X, dtype=float)
        if self.dim == 1 and arr.ndim == 1:
            arr = arr[:, None]
        return self.as_batch(arr)

    def gradient(self, x) -> np.ndarray:
        out = self.grad_log_density(self.as_batch(x))
        return out[0] if np.ndim(x) == 1 else out

    def laplacian(self, x):
        out = self.laplacian_log_density(self.as_batch(x))
        return float(out[0]) if np.ndim(x) == 1 else out

    def unnormalized(self, x):
        """Unnormalized log density; falls back to the normalized one."""
        fn = self.unnorm_log_density or self.log_density
        if fn is None:
            raise CapabilityError(f"{self.name} exposes no (unnormalized) log density")
        out = fn(self.as_batch(x))
        return float(out[0]) if np.ndim(x) == 1 else out

    def normalized(self, x):
        if self.log_density is None:
            raise CapabilityError(f"{self.name} has no normalized log density (normalizer unknown)")
        out = self.log_density(self.as_batch(x))
        return float(out[0]) if np.ndim(x) == 1 else out


def frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr
