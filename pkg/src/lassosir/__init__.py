"""Sparse sliced inverse regression through Lasso regressions on pseudo-responses."""

from .estimators import CentralSpaceEstimate, dt_sir, estimate_d, lasso_sir, matrix_lasso
from .exceptions import (
    DataFormatError,
    DegenerateSpectrumError,
    EmptyPathError,
    SingularCovarianceError,
)
from .linalg import projection_distance
from .simbench import run_benchmark, sample_dataset

__all__ = [
    "CentralSpaceEstimate",
    "DataFormatError",
    "DegenerateSpectrumError",
    "EmptyPathError",
    "SingularCovarianceError",
    "dt_sir",
    "estimate_d",
    "lasso_sir",
    "matrix_lasso",
    "projection_distance",
    "run_benchmark",
    "sample_dataset",
]
