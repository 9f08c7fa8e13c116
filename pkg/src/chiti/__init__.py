"""Eigenfunction comparison on one-dimensional curvature-dimension model spaces.

Modules
-------
model_space
    Density, cumulative mass, quantile and isoperimetric profile.
eigensolver
    First Dirichlet eigenpairs on caps and intervals, matched cap mass,
    finite-volume oracle.
rearrangement
    Distribution functions, decreasing rearrangements, ``L^p`` norms.
comparison
    Reverse Hoelder slack, crossings, cumulative domination, rigidity.
stability
    Norm-gap profile, mean value witness, perimeter ratio, coarea check.
cli
    The ``chiti`` command.
"""

from ._backend import BACKEND
from .comparison import ChitiReport, Tolerances, analyze, prepare
from .eigensolver import (
    AlphaSolution,
    Cap,
    EigenPair,
    InfeasibleError,
    Interval,
    SolverError,
    find_alpha,
    first_eigen,
    first_eigen_cap,
    first_eigen_interval,
    oracle_fd_eigen,
)
from .model_space import (
    DomainError,
    ModelParams,
    cumulative,
    density,
    isoperimetric_profile,
    quantile,
)
from .rearrangement import StepProfile, WeightedSamples, decreasing_rearrangement, lp_norm
from .stability import StabilityReport, stability_analysis

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AlphaSolution",
    "Cap",
    "ChitiReport",
    "DomainError",
    "EigenPair",
    "InfeasibleError",
    "Interval",
    "ModelParams",
    "SolverError",
    "StabilityReport",
    "StepProfile",
    "Tolerances",
    "WeightedSamples",
    "analyze",
    "cumulative",
    "decreasing_rearrangement",
    "density",
    "find_alpha",
    "first_eigen",
    "first_eigen_cap",
    "first_eigen_interval",
    "isoperimetric_profile",
    "lp_norm",
    "oracle_fd_eigen",
    "prepare",
    "quantile",
    "stability_analysis",
    "__version__",
]
