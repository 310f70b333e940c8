"""Brute-force reference implementations used by the test-suite.

Nothing in the production path imports this module. Each oracle takes a
different route from the code it checks: the dense operator is assembled node
by node from the 13-point stencil and inverted with LAPACK, ``H`` is
integrated numerically, gradients come from finite differences and the
fibering maximum from a grid scan.
"""

from __future__ import annotations

import numpy as np

from .dual import DualContext
from .grid import BC, Field, Grid2D, split
from .nonlinearity import Nonlinearity

__all__ = ["DenseOperator", "MAX_DENSE", "dense_T", "dense_biharmonic", "quad_H", "fd_gradient", "scan_fibering"]

MAX_DENSE = 289


def dense_biharmonic(grid: Grid2D) -> np.ndarray:
    """Dense ``Delta_h^2 = d_xxxx + 2 d_xx d_yy + d_yyyy`` assembled stencil by stencil.

    Off-grid points at distance one are boundary nodes (value 0). At distance
    two they are ghosts mirrored through the boundary: evenly for the clamped
    condition (``du/dn = 0``) and oddly for Navier (``Delta u = 0``).
    """
    nx, ny = grid.nx, grid.ny
    hx4, hy4, hxy = grid.hx**4, grid.hy**4, grid.hx**2 * grid.hy**2
    mirror = 1.0 if grid.bc is BC.DIRICHLET else -1.0
    stencil = {
        (0, 0): 6 / hx4 + 6 / hy4 + 8 / hxy,
        (1, 0): -4 / hx4 - 4 / hxy, (-1, 0): -4 / hx4 - 4 / hxy,
        (0, 1): -4 / hy4 - 4 / hxy, (0, -1): -4 / hy4 - 4 / hxy,
        (2, 0): 1 / hx4, (-2, 0): 1 / hx4,
        (0, 2): 1 / hy4, (0, -2): 1 / hy4,
        (1, 1): 2 / hxy, (1, -1): 2 / hxy, (-1, 1): 2 / hxy, (-1, -1): 2 / hxy,
    }

    def resolve(k, n):
        if 0 <= k < n:
            return k, 1.0
        if k in (-1, n):
            return None, 0.0
        return (-2 - k, mirror) if k < 0 else (2 * n - k, mirror)

    K = np.zeros((nx * ny, nx * ny))
    for j in range(ny):
        for i in range(nx):
            row = j * nx + i
            for (di, dj), coef in stencil.items():
                ii, si = resolve(i + di, nx)
                jj, sj = resolve(j + dj, ny)
                if ii is None or jj is None:
                    continue
                K[row, jj * nx + ii] += coef * si * sj
    return K


class DenseOperator:
    """Explicit matrix of ``T`` on a small grid."""

    def __init__(self, grid: Grid2D, matrix: np.ndarray):
        self.grid = grid
        self.matrix = matrix

    def apply(self, w: Field) -> Field:
        return Field(self.grid, self.matrix @ w.values)

    def bilinear(self, w1: Field, w2: Field) -> float:
        return self.grid.cell_area * float(w1.values @ self.matrix @ w2.values)


def dense_T(grid: Grid2D) -> DenseOperator:
    if grid.size > MAX_DENSE:
        raise ValueError(f"grid too large for the dense oracle ({grid.size} > {MAX_DENSE} nodes)")
    return DenseOperator(grid, np.linalg.inv(dense_biharmonic(grid)))


def quad_H(nl: Nonlinearity, t: float, n_panels: int = 2048) -> float:
    """``int_0^t h(s) ds`` by composite Simpson.

    The substitution ``s = t y^(q-1)`` removes the ``s^(1/(q-1))`` cusp of
    ``h`` at the origin, so the rule sees a smooth integrand on ``[0, 1]``.
    """
    if n_panels < 64:
        raise ValueError("need at least 64 panels")
    n_panels += n_panels % 2
    if t == 0:
        return 0.0
    t = abs(t)  # H is even
    m = nl.q - 1.0
    y = np.linspace(0.0, 1.0, n_panels + 1)
    g = nl.h(t * y**m) * t * m * y ** (m - 1.0)
    wts = np.ones(n_panels + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    return float(np.dot(wts, g) / (3.0 * n_panels))


def fd_gradient(ctx: DualContext, w: Field, eps: float = 1e-5) -> Field:
    """Central-difference nodal gradient of ``Psi``, divided by the cell area
    so it is comparable with the quadrature gradient."""
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    base = w.values
    out = np.empty_like(base)
    for k in range(base.size):
        e = np.zeros_like(base)
        e[k] = eps
        out[k] = (ctx.psi_array(base + e) - ctx.psi_array(base - e)) / (2 * eps)
    return Field(w.grid, out / w.grid.cell_area)


def scan_fibering(ctx: DualContext, v: Field, box: tuple[float, float], resolution: int = 200):
    """Grid argmax of ``Psi(t v+ + s v-)`` over ``box x box``.

    The quadratic part uses the dense oracle operator. Returns ``(t, s, value)``.
    """
    if resolution < 50:
        raise ValueError("resolution must be at least 50")
    M = dense_T(ctx.grid).matrix
    vp, vm = (part.values for part in split(v))
    area = ctx.grid.cell_area
    a = area * vp @ M @ vp
    b = area * vm @ M @ vm
    c = area * vp @ M @ vm
    grid = np.linspace(box[0], box[1], resolution)
    Hp = np.array([area * np.sum(ctx.nl.H(t * vp)) for t in grid])
    Hm = np.array([area * np.sum(ctx.nl.H(s * vm)) for s in grid])
    T, S = np.meshgrid(grid, grid, indexing="ij")
    vals = Hp[:, None] + Hm[None, :] - 0.5 * (T * T * a + 2 * T * S * c + S * S * b)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return float(grid[i]), float(grid[j]), float(vals[i, j])
