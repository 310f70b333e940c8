"""Dual functional ``Psi(w) = int H(w) - 1/2 int w T w`` and the primal energy.

A critical point ``w`` of ``Psi`` satisfies ``T w = h(w)``; then ``u = T w``
solves ``Delta^2 u = f(u)`` and ``Psi(w) = I(u)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operator as _op
from .grid import BC, Field, Grid2D, inner, lp_norm
from .nonlinearity import Nonlinearity

__all__ = [
    "DualContext",
    "EnergyReport",
    "make_context",
    "psi",
    "grad_psi",
    "primal_energy",
    "energy_report",
]


@dataclass(frozen=True, eq=False)
class DualContext:
    """The triple (grid, T, f) that ``Psi`` is built from. Read-only once made."""

    grid: Grid2D
    op: _op.BiharmonicInverse
    nl: Nonlinearity

    def __post_init__(self):
        if self.op.grid != self.grid:
            raise ValueError("operator was built for a different grid")

    # array-level kernels shared by the public functions and the solvers

    def T(self, w: np.ndarray) -> np.ndarray:
        return self.op.solve(w)

    def dot(self, a: np.ndarray, b: np.ndarray) -> float:
        return self.grid.cell_area * float(np.sum(a * b))

    def psi_array(self, w: np.ndarray, Tw: np.ndarray | None = None) -> float:
        if Tw is None:
            Tw = self.T(w)
        return self.grid.cell_area * float(np.sum(self.nl.H(w))) - 0.5 * self.dot(w, Tw)

    def residual_array(self, w: np.ndarray, u: np.ndarray) -> float:
        """``|w - f(u)| / |w|`` in the dual Lebesgue norm."""
        r = self.nl.dual_exponent
        num = float(np.sum(np.abs(w - self.nl.f(u)) ** r))
        den = float(np.sum(np.abs(w) ** r))
        if den == 0.0:
            den = 1.0 / self.grid.cell_area
        return (num / den) ** (1.0 / r)


def make_context(grid: Grid2D, nl: Nonlinearity, op: _op.BiharmonicInverse | None = None) -> DualContext:
    return DualContext(grid, op if op is not None else _op.build(grid), nl)


def psi(ctx: DualContext, w: Field) -> float:
    return ctx.psi_array(w.values)


def grad_psi(ctx: DualContext, w: Field) -> Field:
    """Nodal field ``h(w) - T w``, so that ``Psi'(w) eta = inner(grad, eta)``."""
    return Field(ctx.grid, ctx.nl.h(w.values) - ctx.T(w.values))


def primal_energy(ctx: DualContext, u: Field, w: Field | None = None) -> float:
    """``I(u) = 1/2 int |Delta u|^2 - int F(u)``.

    With ``w`` given (``u = T w``) the bending term is ``1/2 inner(w, u)``.
    Otherwise the discrete operator is applied to ``u``: ``|A u|^2`` for Navier
    and the clamped quadratic form ``u . K u`` for Dirichlet.
    """
    area = ctx.grid.cell_area
    if w is not None:
        bending = inner(w, u)
    elif ctx.grid.bc is BC.NAVIER:
        lap = _op.laplacian_matrix(ctx.grid) @ u.values
        bending = area * float(np.sum(lap * lap))
    else:
        bending = area * float(np.sum(u.values * (ctx.op.matrix @ u.values)))
    return 0.5 * bending - area * float(np.sum(ctx.nl.F(u.values)))


@dataclass(frozen=True)
class EnergyReport:
    psi: float
    primal: float
    gap: float
    residual: float
    note: str = ""


def energy_report(ctx: DualContext, w: Field) -> EnergyReport:
    """Measure ``Psi(w)``, ``I(Tw)`` and the dual residual ``|w - f(Tw)| / |w|``.

    Nothing is asserted: ``Psi(w) = I(Tw)`` only holds at critical points.
    """
    u = ctx.T(w.values)
    p_val = ctx.psi_array(w.values, u)
    i_val = primal_energy(ctx, Field(ctx.grid, u), w)
    if w.is_zero():
        res = lp_norm(Field(ctx.grid, ctx.nl.f(u)), ctx.nl.dual_exponent)
        return EnergyReport(p_val, i_val, abs(p_val - i_val), res, note="trivial state")
    return EnergyReport(p_val, i_val, abs(p_val - i_val), ctx.residual_array(w.values, u))
