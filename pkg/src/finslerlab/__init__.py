"""Numerical Riemann-Finsler surface geometry and Gauss-Bonnet checks."""

from .connection import geometry, invariants, spray, structure_equation_residual
from .curves import CurveSpec, CurveTrace, integrate_geodesic, integrate_n_parallel, self_intersections, trace
from .domain import DomainSpec, annulus, disk, half_disk, polygon, square, triangle, triangulate
from .errors import (
    CertificationError,
    ConfigError,
    ConvergenceError,
    ConvexityError,
    FinslerError,
    GeometryError,
    ParameterError,
    ZeroDirectionError,
)
from .gauss_bonnet import GBReport, VectorFieldSpec, field_index, gauss_bonnet_check, topological_lemma_check
from .indicatrix import indicatrix_length, landsberg_angle, sample_indicatrix, solve_normal
from .metric import MetricSpec, berwald_frame, eval_norm, fundamental_tensor, main_scalar_I, metric_jet

__version__ = "0.1.0"

__all__ = [
    "CertificationError", "ConfigError", "ConvergenceError", "ConvexityError", "CurveSpec",
    "CurveTrace", "DomainSpec", "FinslerError", "GBReport", "GeometryError", "MetricSpec",
    "ParameterError", "VectorFieldSpec", "ZeroDirectionError", "annulus", "berwald_frame", "disk",
    "eval_norm", "field_index", "fundamental_tensor", "gauss_bonnet_check", "geometry", "half_disk",
    "indicatrix_length", "integrate_geodesic", "integrate_n_parallel", "invariants",
    "landsberg_angle", "main_scalar_I", "metric_jet", "polygon", "sample_indicatrix",
    "self_intersections", "solve_normal", "spray", "square", "structure_equation_residual",
    "topological_lemma_check", "trace", "triangle", "triangulate",
]
