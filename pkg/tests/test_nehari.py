import numpy as np
import pytest

from biharm_dual import (
    Field,
    Grid2D,
    ProjectionError,
    bilinear_T,
    cross_term_inequality,
    fibering_jacobian,
    fibering_terms,
    fibering_value,
    inner,
    make_context,
    nodal_defects,
    project_nodal,
    project_ray,
    ray_defect,
    split,
)
from biharm_dual.oracle import dense_T, scan_fibering


def random_dipole(grid, rng, spread=3.0):
    """Left positive / right negative field with independently scaled halves."""
    base = grid.sine_mode(2, 1).values * rng.uniform(0.5, 2.0, grid.size)
    scale = np.where(base > 0, rng.uniform(1, spread), rng.uniform(1, spread))
    return Field(grid, base * scale * rng.uniform(0.1, 10.0))


def ray_closed_form(ctx, w):
    (a, p), = ctx.nl.terms
    hw = inner(Field(ctx.grid, ctx.nl.h(w.values)), w)
    return (hw / bilinear_T(ctx.op, w, w)) ** ((p - 1) / (p - 2))


def test_ray_projection_closed_form(ctx17, rng):
    g = ctx17.grid
    for _ in range(10):
        w = Field(g, rng.uniform(0.1, 1.0, g.size) * g.sine_mode().values * rng.uniform(0.01, 100))
        t = project_ray(ctx17, w)
        assert t == pytest.approx(ray_closed_form(ctx17, w), rel=1e-10)
        assert ray_defect(ctx17, t * w) <= 1e-10


def test_ray_projection_multi_term(mixed, rng):
    ctx = make_context(Grid2D(9, 9), mixed)
    for scale in (1e-3, 1.0, 1e3):
        w = ctx.grid.sine_mode() * scale
        assert ray_defect(ctx, project_ray(ctx, w) * w) <= 1e-12


def test_ray_projection_rejects_zero(ctx9):
    with pytest.raises(ProjectionError):
        project_ray(ctx9, ctx9.grid.zeros())


def test_nodal_projection_defects(ctx17, rng):
    for _ in range(5):
        v = random_dipole(ctx17.grid, rng)
        proj = project_nodal(ctx17, v)
        w = proj.apply(v)
        assert max(nodal_defects(ctx17, w)) <= 1e-10
        r, R = proj.box
        assert r <= proj.t <= R
        assert proj.aspect * r <= proj.s <= proj.aspect * R


def test_nodal_projection_guess_agrees(ctx17, rng):
    v = random_dipole(ctx17.grid, rng)
    a = project_nodal(ctx17, v)
    b = project_nodal(ctx17, v, guess=(1.0, 1.0))
    assert (b.t, b.s) == pytest.approx((a.t, a.s), rel=1e-8)


def test_nodal_projection_needs_both_signs(ctx9):
    with pytest.raises(ProjectionError):
        project_nodal(ctx9, ctx9.grid.sine_mode())


def test_projection_matches_scan(ctx9, rng):
    v = random_dipole(ctx9.grid, rng)
    proj = project_nodal(ctx9, v)
    box = (0.0, 2.3 * max(proj.t, proj.s))
    res = 401
    t, s, val = scan_fibering(ctx9, v, box, res)
    cell = (box[1] - box[0]) / (res - 1)
    assert abs(t - proj.t) <= cell and abs(s - proj.s) <= cell
    assert fibering_value(ctx9, v, proj.t, proj.s) >= val * (1 - 1e-12)


@pytest.fixture(scope="module")
def nodal_point(ctx17):
    rng = np.random.default_rng(7)
    v = random_dipole(ctx17.grid, rng)
    return project_nodal(ctx17, v).apply(v)


def test_fibering_maximum_at_one_one(ctx17, nodal_point):
    top = fibering_value(ctx17, nodal_point, 1.0, 1.0)
    for t in np.linspace(0.0, 2.0, 50):
        for s in np.linspace(0.0, 2.0, 50):
            assert fibering_value(ctx17, nodal_point, t, s) <= top * (1 + 1e-12)


def test_fibering_jacobian_sign_and_fd(ctx17, nodal_point):
    jac, det = fibering_jacobian(ctx17, nodal_point)
    assert det < 0
    assert det == pytest.approx(np.linalg.det(jac), rel=1e-10)
    terms = fibering_terms(ctx17, nodal_point)
    assert terms["G_plus"] < terms["cross"] < 0
    assert terms["G_minus"] < terms["cross"]

    # V(s, t) = (Psi'(w_ts) t w+, Psi'(w_ts) s w-), differentiated numerically at (1, 1)
    wp, wm = (part.values for part in split(nodal_point))
    M = dense_T(ctx17.grid).matrix
    area = ctx17.grid.cell_area

    def V(s, t):
        w = t * wp + s * wm
        g = ctx17.nl.h(w) - M @ w
        return np.array([area * g @ (t * wp), area * g @ (s * wm)])

    eps = 1e-6
    fd = np.column_stack([(V(1 + eps, 1) - V(1 - eps, 1)) / (2 * eps), (V(1, 1 + eps) - V(1, 1 - eps)) / (2 * eps)])
    assert np.max(np.abs(fd - jac)) <= 1e-5 * np.max(np.abs(jac))


def test_cross_term_strict(ctx17, nodal_point):
    c2, ab = cross_term_inequality(ctx17, nodal_point)
    assert c2 < ab


def test_jacobian_rejects_off_manifold(ctx17, nodal_point):
    with pytest.raises(ProjectionError):
        fibering_jacobian(ctx17, nodal_point * 1.5)


def test_rescaled_nodal_point_projects_inside_unit_square(ctx17, nodal_point, rng):
    for _ in range(5):
        lam_p, lam_m = rng.uniform(1.0, 3.0, 2)
        wp, wm = split(nodal_point)
        v = wp * lam_p + wm * lam_m
        from biharm_dual.nehari import _Dipole
        d1, d2, _, _ = _Dipole(ctx17, v.values).defects(1.0, 1.0)
        if d1 > 0 or d2 > 0:
            continue
        proj = project_nodal(ctx17, v)
        assert 0 < proj.t <= 1 and 0 < proj.s <= 1


def test_nehari_quadratic_lower_bound(ctx17, rng):
    # on the Nehari set int w T w = int h(w) w is bounded away from zero
    g = ctx17.grid
    vals = []
    for _ in range(20):
        w = Field(g, rng.standard_normal(g.size) * 10 ** rng.uniform(-3, 3))
        w = project_ray(ctx17, w) * w
        vals.append(bilinear_T(ctx17.op, w, w))
    assert min(vals) >= 1e-8
