"""Coverage analysis for ball-regulated LEO satellite constellations."""

from .bounds import ChannelParams, LinkBudget, coverage_curve, coverage_lb_nakagami, coverage_lb_rayleigh
from .curves import CoverageCurve, fit_db_shift, read_curve, write_curve
from .exceptions import (
    ConditioningError,
    ConvergenceError,
    DomainError,
    InputFormatError,
    InvalidArgumentError,
    LeoCovError,
    TleParseError,
)
from .geometry import GeometryConfig, max_visible_spherical_radius, path_loss
from .montecarlo import SimConfig, coverage_estimate
from .point_process import (
    Observation,
    PointSet,
    RegulationParams,
    fibonacci_lattice,
    fibonacci_regulation_params,
    half_min_distance,
    lattice_size_for_half_distance,
    observe,
    verify_ball_regulation,
)
from .tle import build_snapshot, parse_tle

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "ConditioningError",
    "ConvergenceError",
    "CoverageCurve",
    "DomainError",
    "GeometryConfig",
    "InputFormatError",
    "InvalidArgumentError",
    "LeoCovError",
    "LinkBudget",
    "Observation",
    "PointSet",
    "RegulationParams",
    "SimConfig",
    "TleParseError",
    "build_snapshot",
    "coverage_curve",
    "coverage_estimate",
    "coverage_lb_nakagami",
    "coverage_lb_rayleigh",
    "fibonacci_lattice",
    "fibonacci_regulation_params",
    "fit_db_shift",
    "half_min_distance",
    "lattice_size_for_half_distance",
    "max_visible_spherical_radius",
    "observe",
    "parse_tle",
    "path_loss",
    "read_curve",
    "verify_ball_regulation",
    "write_curve",
]
