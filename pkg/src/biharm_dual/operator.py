"""Discrete inverse of the biharmonic operator.

``T w`` is the grid function ``u`` solving ``Delta^2 u = w`` with ``u = 0`` and
either ``Delta u = 0`` (Navier) or ``du/dn = 0`` (Dirichlet/clamped) on the
boundary.

Navier: ``Delta^2`` is represented as ``A @ A`` where ``A`` is the 5-point
``-Delta`` with homogeneous Dirichlet data, so ``T = A^-1 A^-1`` (two Poisson
solves sharing one Cholesky factor). ``A`` is an M-matrix, hence ``A^-2`` is
entrywise positive.

Dirichlet: the 13-point stencil with the ghost reflection ``u_{-1} = u_{1}``
across each edge. Only diagonal entries of the first interior row/column
change, so the matrix stays symmetric positive definite.

Both matrices are banded in the row-major ordering and are factorized with
LAPACK's banded Cholesky.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .grid import BC, Field, Grid2D, inner

__all__ = [
    "BiharmonicInverse",
    "SolverFailure",
    "build",
    "apply_T",
    "bilinear_T",
    "laplacian_matrix",
    "biharmonic_matrix",
    "RESIDUAL_TOL",
]

RESIDUAL_TOL = 1e-12


class SolverFailure(RuntimeError):
    """Linear solve missed the residual target."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (backward error {residual:.3e})")
        self.residual = residual


def _second_difference(n: int, h: float) -> sp.csr_matrix:
    """1D ``-d^2/dx^2`` with homogeneous Dirichlet ends."""
    e = np.ones(n)
    return sp.diags([-e[:-1], 2.0 * e, -e[:-1]], [-1, 0, 1], format="csr") / h**2


def laplacian_matrix(grid: Grid2D) -> sp.csr_matrix:
    """5-point ``-Delta_h`` on the interior nodes (row-major)."""
    ax = _second_difference(grid.nx, grid.hx)
    ay = _second_difference(grid.ny, grid.hy)
    return (sp.kron(sp.identity(grid.ny), ax) + sp.kron(ay, sp.identity(grid.nx))).tocsr()


def biharmonic_matrix(grid: Grid2D) -> sp.csr_matrix:
    """Sparse discrete ``Delta^2`` for the grid's boundary condition."""
    if grid.bc is BC.NAVIER:
        a = laplacian_matrix(grid)
        return (a @ a).tocsr()
    ax = _second_difference(grid.nx, grid.hx)
    ay = _second_difference(grid.ny, grid.hy)
    dx4 = (ax @ ax).tolil()
    dy4 = (ay @ ay).tolil()
    # clamped ghost reflection adds the u_{-1} coefficient back onto the diagonal
    for d4, n, h in ((dx4, grid.nx, grid.hx), (dy4, grid.ny, grid.hy)):
        d4[0, 0] += 2.0 / h**4
        d4[n - 1, n - 1] += 2.0 / h**4
    ix, iy = sp.identity(grid.nx), sp.identity(grid.ny)
    k = sp.kron(iy, dx4.tocsr()) + 2.0 * sp.kron(ay, ax) + sp.kron(dy4.tocsr(), ix)
    return k.tocsr()


def _lower_banded(m: sp.spmatrix, bandwidth: int) -> np.ndarray:
    n = m.shape[0]
    ab = np.zeros((bandwidth + 1, n))
    for k in range(bandwidth + 1):
        ab[k, : n - k] = m.diagonal(-k)
    return ab


class BiharmonicInverse:
    """Factorized realization of ``T`` for one grid and boundary condition."""

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self.bc = grid.bc
        self.matrix = biharmonic_matrix(grid)
        self._norm_inf = float(abs(self.matrix).sum(axis=1).max())
        if grid.bc is BC.NAVIER:
            factor_of = laplacian_matrix(grid)
            bandwidth = grid.nx
        else:
            factor_of = self.matrix
            bandwidth = 2 * grid.nx
        try:
            self._chol = cholesky_banded(_lower_banded(factor_of, bandwidth), lower=True)
        except (LinAlgError, MemoryError) as exc:
            raise RuntimeError(f"cannot factorize biharmonic operator on {grid.describe()}: {exc}") from exc

    def __repr__(self):
        return f"BiharmonicInverse({self.grid.describe()})"

    def _raw_solve(self, w: np.ndarray) -> np.ndarray:
        c = (self._chol, True)
        if self.bc is BC.NAVIER:
            return cho_solve_banded(c, cho_solve_banded(c, w, check_finite=False), check_finite=False)
        return cho_solve_banded(c, w, check_finite=False)

    def backward_error(self, u: np.ndarray, w: np.ndarray) -> float:
        """Normwise backward error ``|w - K u| / (|K| |u| + |w|)`` in the max norm."""
        r = w - self.matrix @ u
        denom = self._norm_inf * np.max(np.abs(u)) + np.max(np.abs(w))
        return float(np.max(np.abs(r)) / denom) if denom > 0 else 0.0

    def solve(self, w: np.ndarray) -> np.ndarray:
        """Array-level ``T w``; one refinement step if the first solve is loose."""
        w = np.asarray(w, dtype=float)
        if not np.any(w):
            return np.zeros_like(w)
        u = self._raw_solve(w)
        err = self.backward_error(u, w)
        if err > RESIDUAL_TOL:
            u = u + self._raw_solve(w - self.matrix @ u)
            err = self.backward_error(u, w)
            if err > RESIDUAL_TOL:
                raise SolverFailure(f"biharmonic solve failed on {self.grid.describe()}", err)
        return u


def build(grid: Grid2D) -> BiharmonicInverse:
    return BiharmonicInverse(grid)


def apply_T(op: BiharmonicInverse, w: Field) -> Field:
    if w.grid != op.grid:
        raise ValueError("incompatible grids")
    return Field(op.grid, op.solve(w.values))


def bilinear_T(op: BiharmonicInverse, w1: Field, w2: Field) -> float:
    """``int w1 T w2 dx``."""
    if w1.grid != w2.grid:
        raise ValueError("incompatible grids")
    return inner(w1, apply_T(op, w2))
