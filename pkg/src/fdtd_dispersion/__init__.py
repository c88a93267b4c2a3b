"""Numerical-dispersion laboratory for explicit FDTD(2,2) and FDTD(2,4) schemes."""

from .constants import C0, EPS0, MU0
from .dispersion import (
    AllPointsFailed,
    DispersionError,
    DispersionPoint,
    DomainViolation,
    GridSpec,
    NoCrossing,
    NoRealRoot,
    NotConverged,
    PropagationAngle,
    Scheme,
    UnsupportedScheme,
    WaveSpec,
    cfl_max_dt,
    dispersion_lhs,
    dispersion_rhs,
    lemma_monotonicity_check,
    max_knum_over_angles,
    optimal_courant_24,
    p_factor,
    q_factor,
    remark2_crossing,
    scan_angles,
    solve_knum,
)

__version__ = "0.1.0"

__all__ = [
    "C0",
    "EPS0",
    "MU0",
    "AllPointsFailed",
    "DispersionError",
    "DispersionPoint",
    "DomainViolation",
    "GridSpec",
    "NoCrossing",
    "NoRealRoot",
    "NotConverged",
    "PropagationAngle",
    "Scheme",
    "UnsupportedScheme",
    "WaveSpec",
    "cfl_max_dt",
    "dispersion_lhs",
    "dispersion_rhs",
    "lemma_monotonicity_check",
    "max_knum_over_angles",
    "optimal_courant_24",
    "p_factor",
    "q_factor",
    "remark2_crossing",
    "scan_angles",
    "solve_knum",
]
