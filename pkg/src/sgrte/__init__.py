"""Sparse-grid discrete-ordinate DG solver for the steady monoenergetic RTE."""

from .errors import (ArgumentError, AssumptionError, ConfigError, DataError,
                     GeometryError, InternalError, SgrteError, SolverError)
from .ordinates import OrdinateSet, build_sn
from .scattering import PhaseFunction, build_kernel
from .sparse_space import SparseSpace, dof_count, enumerate_dofs

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "AssumptionError", "ConfigError", "DataError", "GeometryError",
    "InternalError", "SgrteError", "SolverError", "OrdinateSet", "build_sn",
    "PhaseFunction", "build_kernel", "SparseSpace", "dof_count", "enumerate_dofs",
]
