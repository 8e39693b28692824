"""Sliding-cone contact sets for degenerate fully nonlinear elliptic equations on grids."""

import os

import numba

if "NUMBA_THREADING_LAYER" not in os.environ and "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # prefer OpenMP; the TBB probe warns on older TBB builds
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .errors import (ConelabError, ConfigError, DegeneracyError, DomainError,  # noqa: E402
                     EmptyRegionError, PreconditionError)
from .field import GridDomain, RegionMask, ScalarField, SymMatrixField, VectorField  # noqa: E402
from .operators import DegeneracyParams  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "ConelabError", "ConfigError", "DegeneracyError", "DomainError", "EmptyRegionError",
    "PreconditionError", "GridDomain", "RegionMask", "ScalarField", "SymMatrixField",
    "VectorField", "DegeneracyParams", "__version__",
]
