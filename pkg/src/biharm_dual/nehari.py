"""Projections onto the Nehari set and the nodal set, and fibering diagnostics.

Nehari set: ``w != 0`` with ``Psi'(w) w = 0``. Along a ray ``t -> t w`` the map
``t -> Psi'(tw) w / t`` is strictly decreasing, so each ray crosses it once.

Nodal set: sign-changing ``w`` with ``Psi'(w) w+ = Psi'(w) w- = 0``. For a
sign-changing ``v`` the nodal projection is ``t v+ + s v-`` where ``(t, s)``
zeroes the defect map

    V(s, t) = (Psi'(t v+ + s v-) t v+,  Psi'(t v+ + s v-) s v-).

With ``a+ = int v+ T v+``, ``a- = int v- T v-`` and ``c = int v+ T v-`` the
components divided by ``t`` and ``s`` read

    D+(t, s) = int h(t v+) v+ - t a+ - s c
    D-(t, s) = int h(s v-) v- - s a- - t c

because ``h(t v+ + s v-) = h(t v+) + h(s v-)`` for disjoint supports. Each is
affine in the other variable, so the sign conditions on a face of a box are
certified by its two corners.

The box is ``[r, R] x [rho r, rho R]`` with ``rho = sqrt(a+ / a-)``. A root needs
``t a+ + s c > 0`` and ``s a- + t c > 0``; the ray ``s = rho t`` lies inside that
cone whenever ``c^2 < a+ a-``, so the far corner is eventually negative in both
components. A square box fails for lopsided dipoles with ``a+ + c <= 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dual import DualContext
from .grid import Field, split

__all__ = [
    "NodalProjection",
    "ProjectionError",
    "project_ray",
    "project_nodal",
    "fibering_value",
    "fibering_terms",
    "fibering_jacobian",
    "cross_term_inequality",
    "nodal_defects",
    "R_MIN",
    "R_MAX",
]

logger = logging.getLogger(__name__)

R_MIN = 1e-8
R_MAX = 1e8
RAY_TOL = 1e-10


class ProjectionError(ValueError):
    pass


# ---------------------------------------------------------------- ray ----


def _ray_root(ctx: DualContext, w: np.ndarray, Tw: np.ndarray | None = None) -> float:
    if not np.any(w):
        raise ProjectionError("ray does not cross the Nehari set: w = 0")
    if Tw is None:
        Tw = ctx.T(w)
    quad = ctx.dot(w, Tw)
    if not quad > 0:
        raise ProjectionError("ray does not cross the Nehari set: int w T w <= 0")
    nz = w[w != 0]
    area = ctx.grid.cell_area
    h = ctx.nl.h

    # log of (int h(tw) w / t) - log(int w T w); strictly decreasing in log t
    def g(x):
        t = math.exp(x)
        return math.log(area * float(np.sum(h(t * nz) * nz)) / t) - math.log(quad)

    lo = hi = 0.0
    g0 = g(0.0)
    if g0 == 0.0:
        return 1.0
    if g0 > 0:
        while g(hi) > 0:
            hi += math.log(2.0)
            if hi > math.log(R_MAX) * 4:
                raise ProjectionError("ray bracket not found (upper)")
    else:
        while g(lo) < 0:
            lo -= math.log(2.0)
            if lo < math.log(R_MIN) * 4:
                raise ProjectionError("ray bracket not found (lower)")
    x = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return math.exp(x)


def project_ray(ctx: DualContext, w: Field) -> float:
    """Unique ``t* > 0`` with ``t* w`` on the Nehari set."""
    return _ray_root(ctx, w.values)


def ray_defect(ctx: DualContext, w: Field) -> float:
    """``|Psi'(w) w| / int h(w) w``; zero exactly on the Nehari set."""
    Tw = ctx.T(w.values)
    hw = ctx.dot(ctx.nl.h(w.values), w.values)
    return abs(hw - ctx.dot(w.values, Tw)) / hw


# -------------------------------------------------------------- nodal ----


class _Dipole:
    """Precomputed quadratic data of a sign-changing field; all evaluations are scalar."""

    def __init__(self, ctx: DualContext, v: np.ndarray, Tvp=None, Tvm=None):
        vp = np.maximum(v, 0.0)
        vm = np.minimum(v, 0.0)
        if not np.any(vp) or not np.any(vm):
            raise ProjectionError("not sign-changing")
        self.ctx = ctx
        self.vp, self.vm = vp, vm
        self.Tvp = ctx.T(vp) if Tvp is None else Tvp
        self.Tvm = ctx.T(vm) if Tvm is None else Tvm
        self.a_p = ctx.dot(vp, self.Tvp)
        self.a_m = ctx.dot(vm, self.Tvm)
        self.c = 0.5 * (ctx.dot(vp, self.Tvm) + ctx.dot(vm, self.Tvp))
        if not (self.a_p > 0 and self.a_m > 0):
            raise ProjectionError("degenerate dipole: int v± T v± <= 0")
        self._sp = vp[vp > 0]
        self._sm = vm[vm < 0]
        self.area = ctx.grid.cell_area
        self.evals = 0

    def phi(self, t: float, part: np.ndarray) -> float:
        self.evals += 1
        return self.area * float(np.sum(self.ctx.nl.h(t * part) * part))

    def dphi(self, t: float, part: np.ndarray) -> float:
        return self.area * float(np.sum(self.ctx.nl.h_prime_sq(t * part))) / (t * t)

    def d_plus(self, t: float, s: float) -> float:
        return self.phi(t, self._sp) - t * self.a_p - s * self.c

    def d_minus(self, t: float, s: float) -> float:
        return self.phi(s, self._sm) - s * self.a_m - t * self.c

    def defects(self, t: float, s: float) -> tuple[float, float, float, float]:
        """``(D+, D-, rel+, rel-)``; relative defects are scaled by ``int h(t v±) v±``."""
        pp = self.phi(t, self._sp)
        pm = self.phi(s, self._sm)
        dp = pp - t * self.a_p - s * self.c
        dm = pm - s * self.a_m - t * self.c
        return dp, dm, abs(dp) / pp, abs(dm) / pm

    def jacobian(self, t: float, s: float) -> np.ndarray:
        """Derivative of ``(D+, D-)`` with respect to ``(t, s)``."""
        return np.array(
            [
                [self.dphi(t, self._sp) - self.a_p, -self.c],
                [-self.c, self.dphi(s, self._sm) - self.a_m],
            ]
        )

    def fibering(self, t: float, s: float) -> float:
        nl = self.ctx.nl
        hp = self.area * float(np.sum(nl.H(t * self._sp)))
        hm = self.area * float(np.sum(nl.H(s * self._sm)))
        return hp + hm - 0.5 * (t * t * self.a_p + 2.0 * t * s * self.c + s * s * self.a_m)


@dataclass
class NodalProjection:
    """Result of a nodal projection ``t v+ + s v-``.

    ``residual`` is the larger of the two relative defects. ``box = (r, R)`` is
    the ``t`` range of the Miranda box and ``aspect`` the factor giving its
    ``s`` range. ``pattern`` records the observed sign of each component of
    ``V`` on the faces of the box.
    """

    t: float
    s: float
    residual: float
    box: tuple[float, float]
    pattern: dict = field(default_factory=dict)
    method: str = "miranda"
    evaluations: int = 0
    aspect: float = 1.0

    def apply(self, v: Field) -> Field:
        vp, vm = split(v)
        return Field(v.grid, self.t * vp.values + self.s * vm.values)


def _newton(dp: _Dipole, t: float, s: float, tol: float, maxiter: int = 30):
    """Newton on ``(D+, D-)``. Steps are taken only where the Jacobian is
    negative definite (equivalently the (s, t)-ordered ``V`` Jacobian has
    negative determinant) and are halved to keep the iterate positive and
    the defect decreasing. Returns ``(t, s, residual)`` or ``None``."""
    d1, d2, r1, r2 = dp.defects(t, s)
    res = max(r1, r2)
    for _ in range(maxiter):
        if res <= tol:
            return t, s, res
        J = dp.jacobian(t, s)
        if not (J[0, 0] < 0 and np.linalg.det(J) > 0):
            return None
        step = np.linalg.solve(J, [-d1, -d2])
        lam = 1.0
        for _ in range(30):
            tn, sn = t + lam * step[0], s + lam * step[1]
            if tn > 0 and sn > 0:
                e1, e2, q1, q2 = dp.defects(tn, sn)
                if max(q1, q2) < res:
                    break
            lam *= 0.5
        else:
            return None
        t, s, d1, d2, res = tn, sn, e1, e2, max(q1, q2)
    return (t, s, res) if res <= tol else None


def _miranda_box(dp: _Dipole, rho: float):
    """Grow ``[r, R] x [rho r, rho R]`` by factors of 2 until V points inward on every face."""
    r = R = 1.0
    log = []
    while True:
        sr, sR = rho * r, rho * R
        face_tr = dp.d_plus(r, sr) > 0 and dp.d_plus(r, sR) > 0
        face_sr = dp.d_minus(r, sr) > 0 and dp.d_minus(R, sr) > 0
        face_tR = dp.d_plus(R, sr) < 0 and dp.d_plus(R, sR) < 0
        face_sR = dp.d_minus(r, sR) < 0 and dp.d_minus(R, sR) < 0
        log.append((r, R, face_tr, face_sr, face_tR, face_sR))
        if face_tr and face_sr and face_tR and face_sR:
            pattern = {"t=r": "+", "s=r": "+", "t=R": "-", "s=R": "-"}
            logger.debug("Miranda box [%g, %g] with face signs %s", r, R, pattern)
            return r, R, pattern
        if not (face_tr and face_sr):
            r *= 0.5
        if not (face_tR and face_sR):
            R *= 2.0
        if r < R_MIN or R > R_MAX:
            probes = "; ".join(
                f"[{a:.3g},{b:.3g}] faces(t=r,s=r,t=R,s=R)={int(c)}{int(d)}{int(e)}{int(f)}"
                for a, b, c, d, e, f in log[-6:]
            )
            raise ProjectionError(f"Miranda bracket not found within [{R_MIN:g}, {R_MAX:g}]: {probes}")


def _project(dp: _Dipole, tol: float, guess=None) -> NodalProjection:
    if guess is not None:
        hit = _newton(dp, float(guess[0]), float(guess[1]), tol)
        if hit is not None:
            return NodalProjection(hit[0], hit[1], hit[2], (min(hit[:2]), max(hit[:2])),
                                   method="newton", evaluations=dp.evals)
    rho = math.sqrt(dp.a_p / dp.a_m)
    r, R, pattern = _miranda_box(dp, rho)
    inner_xtol = 1e-12 * rho * r

    def s_of_t(t):
        return brentq(lambda s: dp.d_minus(t, s), rho * r, rho * R, xtol=inner_xtol, rtol=1e-15)

    def outer(t):
        return dp.d_plus(t, s_of_t(t))

    t = brentq(outer, r, R, xtol=1e-10 * r, rtol=1e-12)
    s = s_of_t(t)
    _, _, r1, r2 = dp.defects(t, s)
    res, method = max(r1, r2), "miranda"
    if res > tol:
        hit = _newton(dp, t, s, tol)
        if hit is not None:
            t, s, res = hit
            method = "miranda+newton"
    if res > tol:
        raise ProjectionError(f"nodal projection stalled at defect {res:.3e} > {tol:.1e}")
    return NodalProjection(t, s, res, (r, R), pattern, method, dp.evals, rho)


def project_nodal(ctx: DualContext, v: Field, tol: float = 1e-10, guess=None) -> NodalProjection:
    """Find ``(t, s)`` putting ``t v+ + s v-`` on the nodal set.

    Box search, nested root solves (``s`` given ``t``, then ``t``) and a Newton
    polish. With ``guess`` a Newton solve from that point is tried first and
    the box search only runs if it fails.
    """
    return _project(_Dipole(ctx, v.values), tol, guess)


def nodal_defects(ctx: DualContext, w: Field) -> tuple[float, float]:
    """Relative defects ``|Psi'(w) w±| / int h(w±) w±`` at ``(t, s) = (1, 1)``."""
    _, _, r1, r2 = _Dipole(ctx, w.values).defects(1.0, 1.0)
    return r1, r2


def fibering_value(ctx: DualContext, v: Field, t: float, s: float) -> float:
    """``h^v(t, s) = Psi(t v+ + s v-)``."""
    if t < 0 or s < 0:
        raise ValueError("fibering parameters must be non-negative")
    vp, vm = split(v)
    return ctx.psi_array(t * vp.values + s * vm.values)


def fibering_terms(ctx: DualContext, w: Field) -> dict:
    """``G(w±) = int h'(w±) (w±)^2 - int w± T w±`` and the quadratic pieces."""
    dp = _Dipole(ctx, w.values)
    area = ctx.grid.cell_area
    g_plus = area * float(np.sum(ctx.nl.h_prime_sq(dp.vp))) - dp.a_p
    g_minus = area * float(np.sum(ctx.nl.h_prime_sq(dp.vm))) - dp.a_m
    return {"G_plus": g_plus, "G_minus": g_minus, "cross": dp.c, "a_plus": dp.a_p, "a_minus": dp.a_m}


def fibering_jacobian(ctx: DualContext, w: Field, tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Jacobian of ``V(s, t)`` at ``(1, 1)`` for ``w`` on the nodal set.

    Rows are the components ``(Psi'(.) t w+, Psi'(.) s w-)``, columns the
    variables in ``V``'s argument order ``(s, t)``::

        [[-c,  G(w+)],
         [G(w-), -c ]]       det = c^2 - G(w+) G(w-) < 0

    since ``G(w±) < c < 0``. Swapping the columns gives the (negative definite)
    Hessian of ``h^w`` in ``(t, s)`` order.
    """
    r1, r2 = nodal_defects(ctx, w)
    if max(r1, r2) > tol:
        raise ProjectionError(f"w is not on the nodal set (defects {r1:.2e}, {r2:.2e})")
    g = fibering_terms(ctx, w)
    c = g["cross"]
    jac = np.array([[-c, g["G_plus"]], [g["G_minus"], -c]])
    return jac, float(c * c - g["G_plus"] * g["G_minus"])


def cross_term_inequality(ctx: DualContext, w: Field) -> tuple[float, float]:
    """``((int w+ T w-)^2, (int w+ T w+)(int w- T w-))``; expected ``lhs < rhs``."""
    vp, vm = split(w)
    if vp.is_zero() or vm.is_zero():
        raise ProjectionError("degenerate split: w does not change sign")
    dp = _Dipole(ctx, w.values)
    return dp.c * dp.c, dp.a_p * dp.a_m
