"""Counting solutions of nonlinear equations by tracing preimages of lines."""

from .bifurcation import (
    BifurcationDiagram,
    LineSpec,
    OrthantSampler,
    build_diagram,
    multi_line_campaign,
    sampling_campaign,
)
from .continuation import CodomainPath, StepConfig, trace
from .core import MapHandle, Solution, SolutionSet, newton_solve, relative_residue
from .elliptic import GridDomain, SparseOperator, build_fd_laplacian, ingest_operator, vertical_scan
from .errors import FoldcontError
from .sturm import PLNonlinearity, build_operator, calibrate_arctan, enumerate_pl_solutions

__version__ = "0.1.0"

__all__ = [
    "BifurcationDiagram",
    "CodomainPath",
    "FoldcontError",
    "GridDomain",
    "LineSpec",
    "MapHandle",
    "OrthantSampler",
    "PLNonlinearity",
    "Solution",
    "SolutionSet",
    "SparseOperator",
    "StepConfig",
    "build_diagram",
    "build_fd_laplacian",
    "build_operator",
    "calibrate_arctan",
    "enumerate_pl_solutions",
    "ingest_operator",
    "multi_line_campaign",
    "newton_solve",
    "relative_residue",
    "sampling_campaign",
    "trace",
    "vertical_scan",
]
