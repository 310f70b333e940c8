"""Dual-method solver for ``Delta^2 u = f(u)`` with Navier or clamped boundary conditions.

The positive ground state minimizes the dual functional ``Psi`` over the Nehari
set; the nodal ground state minimizes it over the set of sign-changing
``w`` whose positive and negative parts both satisfy the Nehari condition.
"""

from .dual import DualContext, EnergyReport, energy_report, grad_psi, make_context, primal_energy, psi
from .grid import BC, Field, Grid2D, inner, integrate, lp_norm, split
from .nehari import (
    NodalProjection,
    ProjectionError,
    cross_term_inequality,
    fibering_jacobian,
    fibering_terms,
    fibering_value,
    nodal_defects,
    project_nodal,
    project_ray,
    ray_defect,
)
from .nonlinearity import InversionError, Nonlinearity, parse_term
from .operator import BiharmonicInverse, SolverFailure, apply_T, bilinear_T, build
from .solver import (
    Classification,
    SolveError,
    SolveReport,
    SolverConfig,
    classify,
    initial_guess,
    solve_ground_state,
    solve_nodal,
)

__all__ = [
    "BC", "Grid2D", "Field", "integrate", "inner", "split", "lp_norm",
    "BiharmonicInverse", "SolverFailure", "build", "apply_T", "bilinear_T",
    "Nonlinearity", "InversionError", "parse_term",
    "DualContext", "EnergyReport", "make_context", "psi", "grad_psi", "primal_energy", "energy_report",
    "NodalProjection", "ProjectionError", "project_ray", "ray_defect", "project_nodal", "nodal_defects",
    "fibering_value", "fibering_terms", "fibering_jacobian", "cross_term_inequality",
    "Classification", "SolverConfig", "SolveReport", "SolveError", "classify", "initial_guess",
    "solve_ground_state", "solve_nodal",
]
