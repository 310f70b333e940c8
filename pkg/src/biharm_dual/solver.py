"""Descent drivers for the ground state (minimum of Psi on the Nehari set) and
the nodal ground state (minimum of Psi on the nodal set).

Each iteration takes a step along the preconditioned negative gradient, maps
the trial point back onto the constraint set (ray projection or nodal
projection) and accepts it under an Armijo condition on the projected value.
At a point of the constraint set the rescaling directions are stationary, so
the projected value changes to first order exactly like ``Psi`` along the step.

Two descent metrics are available:

``"scaled"`` (default)
    ``d = -f'(h(w)) * (h(w) - T w)``, i.e. the gradient preconditioned by the
    inverse of the diagonal ``h'(w)`` part of the Hessian. A unit step is a
    damped version of the fixed-point map ``w -> f(T w)``.
``"quadrature"``
    ``d = -(h(w) - T w)``, the plain gradient in the quadrature inner product.
    Very ill-conditioned near the boundary, where ``h'`` blows up.
"""

from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .dual import DualContext
from .grid import Field, lp_norm
from .nehari import ProjectionError, _Dipole, _project, _ray_root

__all__ = [
    "Classification",
    "SolverConfig",
    "SolveReport",
    "SolveError",
    "classify",
    "initial_guess",
    "solve_ground_state",
    "solve_nodal",
    "thread_count",
]

logger = logging.getLogger(__name__)

_MIN_STEP = 1e-14


class Classification(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NODAL = "nodal"


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 5000
    step0: float = 1.0
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    tol_residual: float = 1e-6
    tol_defect: float = 1e-8
    n_starts: int = 2
    seed: int = 0
    metric: str = "scaled"
    perturbation: float = 0.1

    def __post_init__(self):
        for name in ("max_iters", "step0", "armijo_c", "armijo_shrink", "tol_residual", "tol_defect", "n_starts"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.armijo_c <= 0.5:
            raise ValueError("armijo_c must lie in (0, 0.5]")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must lie in (0, 1)")
        if self.metric not in ("scaled", "quadrature"):
            raise ValueError(f"unknown descent metric {self.metric!r}")
        if self.perturbation < 0:
            raise ValueError("perturbation must be non-negative")


@dataclass
class SolveReport:
    kind: str
    w: Field
    u: Field
    psi: float
    primal: float
    residual: float
    iters: int
    trace: list = field(default_factory=list)
    classification: Classification | None = None
    nodal_domains: int = 0
    converged: bool = False
    seed: int | None = None
    defects: tuple = ()
    collapses: int = 0
    starts: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        return abs(self.psi - self.primal)

    def scalars(self) -> dict:
        return {
            "kind": self.kind,
            "psi": self.psi,
            "primal": self.primal,
            "gap": self.gap,
            "residual": self.residual,
            "iters": self.iters,
            "converged": self.converged,
            "classification": self.classification.value if self.classification else None,
            "nodal_domains": self.nodal_domains,
            "seed": self.seed,
            "defects": list(self.defects),
            "collapses": self.collapses,
            "max_u": float(np.max(self.u.values)),
            "min_u": float(np.min(self.u.values)),
            "starts": self.starts,
        }


class SolveError(RuntimeError):
    def __init__(self, message: str, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


class _Collapse(Exception):
    pass


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("BIHARM_DUAL_THREADS", "1")))
    except ValueError:
        return 1


def classify(u: Field) -> tuple[Classification, int]:
    """Sign class and number of 4-connected sign components of ``u``.

    Entries within ``1e-9 * max|u|`` of zero count as neither sign.
    """
    top = u.max_abs()
    if top == 0:
        raise ValueError("cannot classify the zero field")
    arr = u.as_array()
    eps = 1e-9 * top
    _, n_pos = ndimage.label(arr > eps)
    _, n_neg = ndimage.label(arr < -eps)
    if n_pos and n_neg:
        return Classification.NODAL, n_pos + n_neg
    if n_pos:
        return Classification.POSITIVE, n_pos
    return Classification.NEGATIVE, n_neg


def initial_guess(ctx: DualContext, kind: str, seed: int | None = 0, perturbation: float = 0.1) -> Field:
    """Unit-norm start: sine bump (``"ground"``) or left/right dipole (``"nodal"``),
    each modulated by ``1 + perturbation * U(-1, 1)``."""
    grid = ctx.grid
    base = grid.sine_mode(1, 1) if kind == "ground" else grid.sine_mode(2, 1)
    vals = base.values
    if seed is not None and perturbation > 0:
        rng = np.random.default_rng(seed)
        vals = vals * (1.0 + perturbation * rng.uniform(-1.0, 1.0, vals.size))
    w = Field(grid, vals)
    return w * (1.0 / lp_norm(w, 2))


def _direction(ctx: DualContext, w: np.ndarray, hw: np.ndarray, Tw: np.ndarray, metric: str):
    g = hw - Tw
    if metric == "scaled":
        return g, -ctx.nl.f_prime(hw) * g
    return g, -g


def _descend_ground(ctx: DualContext, w0: np.ndarray, cfg: SolverConfig, seed) -> SolveReport:
    nl = ctx.nl
    w = w0 * _ray_root(ctx, w0)
    Tw = ctx.T(w)
    val = ctx.psi_array(w, Tw)
    trace = []
    step = cfg.step0
    res = ctx.residual_array(w, Tw)
    it = 0
    converged = res <= cfg.tol_residual
    while not converged and it < cfg.max_iters:
        hw = nl.h(w)
        g, d = _direction(ctx, w, hw, Tw, cfg.metric)
        slope = ctx.dot(g, d)
        alpha = min(2.0 * step, cfg.step0) if it else cfg.step0
        while True:
            z = w + alpha * d
            try:
                Tz = ctx.T(z)
                t = _ray_root(ctx, z, Tz)
            except ProjectionError:
                t = None
            if t is not None:
                z_new, Tz_new = t * z, t * Tz
                val_new = ctx.psi_array(z_new, Tz_new)
                if val_new <= val + cfg.armijo_c * alpha * slope:
                    break
            alpha *= cfg.armijo_shrink
            if alpha < _MIN_STEP:
                logger.info("ground descent stalled at iteration %d (residual %.3e)", it, res)
                break
        if alpha < _MIN_STEP:
            break
        w, Tw, val, step = z_new, Tz_new, val_new, alpha
        it += 1
        res = ctx.residual_array(w, Tw)
        trace.append((val, res, alpha))
        converged = res <= cfg.tol_residual
    return _report(ctx, "ground", w, Tw, val, res, it, trace, converged, seed)


def _descend_nodal(ctx: DualContext, w0: np.ndarray, cfg: SolverConfig, seed) -> SolveReport:
    nl = ctx.nl
    ptol = 0.1 * cfg.tol_defect
    try:
        dp = _Dipole(ctx, w0)
        proj = _project(dp, ptol)
    except ProjectionError as exc:
        raise _Collapse(str(exc)) from exc
    w = proj.t * dp.vp + proj.s * dp.vm
    Tw = proj.t * dp.Tvp + proj.s * dp.Tvm
    val = ctx.psi_array(w, Tw)
    defects = (proj.residual, proj.residual)
    trace = []
    step = cfg.step0
    res = ctx.residual_array(w, Tw)
    it = 0
    converged = res <= cfg.tol_residual
    while not converged and it < cfg.max_iters:
        hw = nl.h(w)
        g, d = _direction(ctx, w, hw, Tw, cfg.metric)
        slope = ctx.dot(g, d)
        alpha = min(2.0 * step, cfg.step0) if it else cfg.step0
        while True:
            z = w + alpha * d
            try:
                zd = _Dipole(ctx, z)
                pr = _project(zd, ptol, guess=(1.0, 1.0))
            except ProjectionError:
                pr = None
            if pr is not None:
                val_new = zd.fibering(pr.t, pr.s)
                if val_new <= val + cfg.armijo_c * alpha * slope:
                    break
            alpha *= cfg.armijo_shrink
            if alpha < _MIN_STEP:
                logger.info("nodal descent stalled at iteration %d (residual %.3e)", it, res)
                break
        if alpha < _MIN_STEP:
            break
        w = pr.t * zd.vp + pr.s * zd.vm
        Tw = pr.t * zd.Tvp + pr.s * zd.Tvm
        val, step, defects = ctx.psi_array(w, Tw), alpha, (pr.residual, pr.residual)
        it += 1
        res = ctx.residual_array(w, Tw)
        trace.append((val, res, alpha))
        converged = res <= cfg.tol_residual and max(defects) <= cfg.tol_defect
    if not (np.any(w > 0) and np.any(w < 0)):
        raise _Collapse("iterate lost a sign")
    rep = _report(ctx, "nodal", w, Tw, val, res, it, trace, converged, seed)
    _, _, r1, r2 = _Dipole(ctx, w).defects(1.0, 1.0)
    rep.defects = (r1, r2)
    rep.converged = converged and max(r1, r2) <= cfg.tol_defect
    return rep


def _report(ctx, kind, w, Tw, val, res, it, trace, converged, seed) -> SolveReport:
    grid = ctx.grid
    primal = 0.5 * ctx.dot(w, Tw) - grid.cell_area * float(np.sum(ctx.nl.F(Tw)))
    u = Field(grid, Tw)
    cls, n = classify(u)
    return SolveReport(kind, Field(grid, w), u, val, primal, res, it, trace, cls, n, converged, seed)


def _multistart(ctx: DualContext, cfg: SolverConfig, kind: str, initial: Field | None) -> SolveReport:
    descend = _descend_ground if kind == "ground" else _descend_nodal
    if initial is not None:
        jobs = [(None, initial.values)]
    else:
        jobs = [
            (cfg.seed + k, initial_guess(ctx, kind, cfg.seed + k, cfg.perturbation).values)
            for k in range(cfg.n_starts)
        ]

    def run(job):
        seed, w0 = job
        try:
            return descend(ctx, w0, cfg, seed)
        except _Collapse as exc:
            logger.info("%s start seed=%s collapsed: %s", kind, seed, exc)
            return None

    workers = min(thread_count(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    collapses = sum(r is None for r in results)
    # a collapsed start is replaced by a fresh seed, at most once per start
    fresh = cfg.seed + cfg.n_starts
    for _ in range(collapses if initial is None else 0):
        rep = run((fresh, initial_guess(ctx, kind, fresh, cfg.perturbation).values))
        collapses += rep is None
        results.append(rep)
        fresh += 1
    done = [r for r in results if r is not None]
    if not done:
        raise SolveError(f"all {len(jobs)} {kind} starts collapsed to one sign")
    starts = [
        {"seed": r.seed, "psi": r.psi, "residual": r.residual, "iters": r.iters, "converged": r.converged}
        for r in done
    ]
    key = lambda r: (r.psi, -1 if r.seed is None else r.seed)  # noqa: E731
    good = sorted((r for r in done if r.converged), key=key)
    best = good[0] if good else min(done, key=lambda r: (r.residual, key(r)))
    best = replace(best, collapses=collapses, starts=starts)
    if not good:
        raise SolveError(
            f"no {kind} start converged (best residual {best.residual:.3e} after {best.iters} iterations)",
            best,
        )
    return best


def solve_ground_state(ctx: DualContext, cfg: SolverConfig | None = None, initial: Field | None = None) -> SolveReport:
    """Minimize ``Psi`` over the Nehari set; multi-start, lowest ``Psi`` wins.

    ``initial`` replaces the generated starts with a single given field.
    """
    cfg = cfg or SolverConfig()
    rep = _multistart(ctx, cfg, "ground", initial)
    top = rep.w.max_abs()
    if float(np.min(rep.w.values)) * float(np.max(rep.w.values)) < -cfg.tol_residual * top * top:
        logger.warning("ground state is not one-signed (%s)", ctx.grid.describe())
    return rep


def solve_nodal(ctx: DualContext, cfg: SolverConfig | None = None, initial: Field | None = None) -> SolveReport:
    """Minimize ``Psi`` over the nodal set starting from seeded dipoles.

    Starts that lose a sign are counted in ``collapses`` and skipped.
    """
    return _multistart(ctx, cfg or SolverConfig(), "nodal", initial)
