"""
The inverse biharmonic operator T
=================================

T maps a load w to the plate deflection u solving Delta^2 u = w. With Navier
conditions it is the square of the inverse Dirichlet Laplacian, so it keeps
positive loads positive. Clamped plates lose that property.
"""

import math

import numpy as np

from biharm_dual import Field, Grid2D, apply_T, bilinear_T, build

# sine modes are eigenvectors; T divides them by the squared eigenvalue
grid = Grid2D(33, 33)
op = build(grid)
w = grid.sine_mode(1, 1)
ratio = apply_T(op, w).values / w.values
print("T on the first sine mode scales it by", ratio.min(), "to", ratio.max())
print("continuum value 1/(4 pi^4) =", 1 / (4 * math.pi**4))

# symmetric and positive definite
rng = np.random.default_rng(0)
a = Field(grid, rng.standard_normal(grid.size))
b = Field(grid, rng.standard_normal(grid.size))
print("int a T b =", bilinear_T(op, a, b), " int b T a =", bilinear_T(op, b, a))
print("int a T a =", bilinear_T(op, a, a))

# a point load: positive everywhere for Navier, a sign change for a clamped plate
for bc in ("navier", "dirichlet"):
    g = Grid2D(33, 33, bc=bc)
    spike = np.zeros(g.size)
    spike[0] = 1.0  # node next to a corner
    u = build(g).solve(spike)
    print(f"{bc:9s} response to a corner load: min {u.min():+.3e}, max {u.max():+.3e}")
