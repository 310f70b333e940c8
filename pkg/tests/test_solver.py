import numpy as np
import pytest

from biharm_dual import (
    Classification,
    Field,
    Grid2D,
    SolveError,
    SolverConfig,
    classify,
    initial_guess,
    make_context,
    nodal_defects,
    ray_defect,
    solve_ground_state,
    solve_nodal,
)


@pytest.fixture(scope="module")
def ctx(cubic):
    return make_context(Grid2D(17, 17), cubic)


@pytest.fixture(scope="module")
def ground(ctx):
    return solve_ground_state(ctx, SolverConfig(n_starts=1))


@pytest.fixture(scope="module")
def nodal(ctx):
    return solve_nodal(ctx, SolverConfig(n_starts=1))


def test_classify_positive():
    g = Grid2D(5, 5)
    assert classify(g.sine_mode()) == (Classification.POSITIVE, 1)
    assert classify(-g.sine_mode()) == (Classification.NEGATIVE, 1)


def test_classify_checkerboard():
    g = Grid2D(4, 4)
    i, j = np.meshgrid(np.arange(4), np.arange(4))
    assert classify(Field(g, (-1.0) ** (i + j))) == (Classification.NODAL, 16)


def test_classify_ignores_tiny_entries():
    g = Grid2D(5, 5)
    v = g.sine_mode().values.copy()
    v[12] = -1e-12
    assert classify(Field(g, v)) == (Classification.POSITIVE, 1)


def test_classify_zero():
    with pytest.raises(ValueError):
        classify(Grid2D(3, 3).zeros())


@pytest.mark.parametrize("kw", [dict(armijo_c=0.7), dict(armijo_shrink=1.0), dict(max_iters=0),
                                dict(tol_residual=-1.0), dict(metric="newton")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_initial_guess_shapes(ctx):
    bump = initial_guess(ctx, "ground", seed=3)
    dip = initial_guess(ctx, "nodal", seed=3)
    assert np.all(bump.values > 0)
    assert classify(dip)[0] is Classification.NODAL
    assert initial_guess(ctx, "ground", seed=3).values.tobytes() == bump.values.tobytes()


def test_ground_state(ground, ctx):
    assert ground.converged and ground.residual <= 1e-6
    assert ground.classification is Classification.POSITIVE and ground.nodal_domains == 1
    assert ground.psi > 0
    assert ground.gap <= 1e-6 * (1 + abs(ground.psi))
    assert ray_defect(ctx, ground.w) <= 1e-9


def test_trace_monotone(ground, nodal):
    for rep in (ground, nodal):
        psi = np.array([row[0] for row in rep.trace])
        assert np.all(np.diff(psi) <= 1e-9 * abs(psi[:-1]))


def test_mirror_start(ctx, ground):
    neg = solve_ground_state(ctx, SolverConfig(), initial=-ground.w)
    assert neg.classification is Classification.NEGATIVE
    assert neg.psi == pytest.approx(ground.psi, rel=1e-10)


def test_nodal_state(nodal, ground, ctx):
    assert nodal.converged and nodal.residual <= 1e-6
    assert nodal.classification is Classification.NODAL and nodal.nodal_domains == 2
    assert max(nodal_defects(ctx, nodal.w)) <= 1e-8
    assert nodal.psi >= ground.psi


def test_mixed_terms_ground(mixed):
    ctx = make_context(Grid2D(13, 13), mixed)
    rep = solve_ground_state(ctx, SolverConfig(n_starts=1))
    assert rep.converged and rep.classification is Classification.POSITIVE


def test_quadrature_metric_descends(ctx):
    # the unpreconditioned gradient is far slower; only check that it descends
    with pytest.raises(SolveError) as err:
        solve_ground_state(ctx, SolverConfig(n_starts=1, metric="quadrature", max_iters=20))
    psi = [row[0] for row in err.value.report.trace]
    assert len(psi) == 20 and psi[-1] < psi[0]


def test_budget_exhaustion_raises(ctx):
    with pytest.raises(SolveError) as err:
        solve_nodal(ctx, SolverConfig(n_starts=1, max_iters=2))
    assert err.value.report is not None and not err.value.report.converged


def test_threads_do_not_change_result(ctx, monkeypatch):
    cfg = SolverConfig(n_starts=3)
    serial = solve_ground_state(ctx, cfg)
    monkeypatch.setenv("BIHARM_DUAL_THREADS", "3")
    threaded = solve_ground_state(ctx, cfg)
    assert threaded.seed == serial.seed
    assert threaded.w.values.tobytes() == serial.w.values.tobytes()


def test_dirichlet_ground_state(cubic):
    ctx = make_context(Grid2D(17, 17, bc="dirichlet"), cubic)
    rep = solve_ground_state(ctx, SolverConfig(n_starts=1))
    assert rep.converged and rep.psi > 0
    assert rep.gap <= 1e-6 * (1 + rep.psi)
