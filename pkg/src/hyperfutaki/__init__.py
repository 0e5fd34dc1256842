"""Bando-Futaki invariants of smooth projective hypersurfaces by exact and numerical routes."""

from .combinatorics import (
    DomainError,
    alpha_closed,
    alpha_table,
    bando_futaki_closed,
    bando_futaki_coeff_route,
    futaki_first,
    harmonic_ratio,
)
from .geometry import GeometryError, GeometryFrame, frames
from .invariants import (
    InvariantReport,
    PathSpec,
    chen_tian,
    futaki_numeric,
    invariant_report,
    kenergy,
    kenergy_path_independence,
    kenergy_slope_check,
    polarization_integral,
)
from .manifest import Manifest, load_manifest, parse_manifest
from .montecarlo import BudgetExhausted, McEstimate, SamplePlan, calibrate, mc_integrate
from .polynomials import DiagonalField, HomogeneousPolynomial, ValidationError, make_field, validate_polynomial
from .verify import verify

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted",
    "DiagonalField",
    "DomainError",
    "GeometryError",
    "GeometryFrame",
    "HomogeneousPolynomial",
    "InvariantReport",
    "Manifest",
    "McEstimate",
    "PathSpec",
    "SamplePlan",
    "ValidationError",
    "alpha_closed",
    "alpha_table",
    "bando_futaki_closed",
    "bando_futaki_coeff_route",
    "calibrate",
    "chen_tian",
    "frames",
    "futaki_first",
    "futaki_numeric",
    "harmonic_ratio",
    "invariant_report",
    "kenergy",
    "kenergy_path_independence",
    "kenergy_slope_check",
    "polarization_integral",
    "load_manifest",
    "make_field",
    "mc_integrate",
    "parse_manifest",
    "validate_polynomial",
    "verify",
]
