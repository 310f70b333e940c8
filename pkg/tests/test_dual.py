import numpy as np
import pytest

from biharm_dual import Field, Grid2D, energy_report, grad_psi, inner, make_context, primal_energy, psi
from biharm_dual.oracle import fd_gradient


def random_field(grid, rng, lo=0.5, hi=2.0):
    mag = rng.uniform(lo, hi, grid.size)
    return Field(grid, mag * rng.choice([-1.0, 1.0], grid.size))


def test_psi_zero(ctx9):
    assert psi(ctx9, ctx9.grid.zeros()) == 0.0
    assert grad_psi(ctx9, ctx9.grid.zeros()).is_zero()


def test_psi_even(ctx9, rng):
    w = random_field(ctx9.grid, rng)
    assert psi(ctx9, -w) == pytest.approx(psi(ctx9, w), rel=1e-14)


def test_gradient_matches_directional_derivative(ctx9, rng):
    w = random_field(ctx9.grid, rng)
    eta = random_field(ctx9.grid, rng)
    eps = 1e-6
    fd = (psi(ctx9, w + eps * eta) - psi(ctx9, w - eps * eta)) / (2 * eps)
    assert inner(grad_psi(ctx9, w), eta) == pytest.approx(fd, rel=1e-7)


def test_fd_gradient_oracle(ctx9, rng):
    w = random_field(ctx9.grid, rng)
    g = grad_psi(ctx9, w).values
    fd = fd_gradient(ctx9, w).values
    assert np.max(np.abs(g - fd)) <= 1e-6 * np.max(np.abs(g))


@pytest.mark.parametrize("bc", ["navier", "dirichlet"])
def test_primal_energy_two_routes(bc, cubic, rng):
    ctx = make_context(Grid2D(11, 9, bc=bc), cubic)
    w = random_field(ctx.grid, rng)
    u = Field(ctx.grid, ctx.T(w.values))
    assert primal_energy(ctx, u) == pytest.approx(primal_energy(ctx, u, w), rel=1e-10)


def test_energy_report_trivial(ctx9):
    rep = energy_report(ctx9, ctx9.grid.zeros())
    assert rep.note == "trivial state"
    assert rep.psi == rep.primal == 0.0


def test_gap_vanishes_at_fixed_point(ctx9, rng):
    # iterate the (normalized) fixed-point map u -> T f(u); for p = 4 the ray
    # rescaling makes it converge to a critical point
    from biharm_dual import project_ray
    w = ctx9.grid.sine_mode()
    for _ in range(200):
        w = project_ray(ctx9, w) * w
        w = Field(ctx9.grid, ctx9.nl.f(ctx9.T(w.values)))
    w = project_ray(ctx9, w) * w
    rep = energy_report(ctx9, w)
    assert rep.residual < 1e-8
    assert rep.gap <= 1e-8 * abs(rep.psi)


def test_context_rejects_foreign_operator(cubic):
    from biharm_dual import build
    with pytest.raises(ValueError):
        make_context(Grid2D(5, 5), cubic, build(Grid2D(6, 5)))
