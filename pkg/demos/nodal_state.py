"""
Sign-changing ground state
==========================

Now Psi is minimized over sign-changing w whose positive and negative parts
are each on the Nehari set. Each step is followed by a two-parameter
rescaling t w+ + s w-.
"""

import numpy as np

from biharm_dual import (
    Grid2D,
    Nonlinearity,
    cross_term_inequality,
    fibering_jacobian,
    make_context,
    solve_ground_state,
    solve_nodal,
)

ctx = make_context(Grid2D(33, 33), Nonlinearity.power(4.0))
ground = solve_ground_state(ctx)
nodal = solve_nodal(ctx)

print(f"ground Psi = {ground.psi:.8g}, nodal Psi = {nodal.psi:.8g}")
print(f"nodal Psi / ground Psi = {nodal.psi / ground.psi:.3f}")
print("sign domains of u:", nodal.nodal_domains)
print("relative Nehari defects of w+ and w-:", nodal.defects)

jac, det = fibering_jacobian(ctx, nodal.w)
print("Jacobian of the defect map at (1, 1):\n", jac, "\ndet =", det)
c2, ab = cross_term_inequality(ctx, nodal.w)
print(f"(int w+ T w-)^2 = {c2:.4e} < {ab:.4e} = int w+ T w+ * int w- T w-")

# the start has a vertical nodal line, but the descent settles on a diagonal
# one: u is odd under reflection across the other diagonal
u = nodal.u.as_array()
top = np.max(np.abs(u))
print("odd under the x = 1/2 mirror:   ", np.max(np.abs(u + u[:, ::-1])) / top)
print("odd under the anti-diagonal flip:", np.max(np.abs(u + u.T[::-1, ::-1])) / top)
print(np.sign(u[::4, ::4]).astype(int))
