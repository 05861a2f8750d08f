"""Numerical toolkit for graph submanifolds of C^{n+1} near CR singularities:
moment tests, Gaussian-kernel polynomial approximation, analytic-disc hull
construction and fiberwise polynomial approximation."""

from ._kernels import BACKEND
from .errors import (
    ConditionStarViolated,
    CRLabError,
    DomainError,
    InfeasiblePointError,
    MomentConditionViolated,
    NumericError,
    UnsupportedKindError,
)
from .geom import (
    AnalyticDisc,
    Fiber,
    GraphSurface,
    HoloPolynomial,
    boundary_residual,
    catalog,
    eval_rho,
    hausdorff_distance,
    load_surface,
    sample_fiber,
    weighted_dilate,
)

__version__ = "0.1.0"
