"""Odd power-sum nonlinearities ``f(t) = sum_j a_j |t|^(p_j - 2) t`` and their duals.

Every evaluator is vectorized: scalars in, floats out; arrays in, arrays out.
``h`` is the inverse of ``f`` and ``H`` its primitive, which is also the
convex conjugate of ``F``.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = ["Nonlinearity", "InversionError", "parse_term"]

logger = logging.getLogger(__name__)

H_TOL = 1e-12
_NEWTON_MAXITER = 100
_BISECT_ITERS = 200


class InversionError(ArithmeticError):
    pass


_TERM_PAIR = re.compile(r"^\s*([^,\s]+)\s*,\s*([^,\s]+)\s*$")
_TERM_EXPR = re.compile(
    r"^\s*(?P<a>[0-9.eE+-]+)\s*\*?\s*\|t\|\s*\^\s*\{?\s*(?P<e>[0-9.eE+-]+)\s*\}?\s*\*?\s*t\s*$"
)


def parse_term(text: str) -> tuple[float, float]:
    """Parse ``"a, p"`` or ``"a*|t|^k t"`` (with ``k = p - 2``) into ``(a, p)``."""
    m = _TERM_PAIR.match(text)
    if m:
        return float(m.group(1)), float(m.group(2))
    m = _TERM_EXPR.match(text)
    if m:
        return float(m.group("a")), float(m.group("e")) + 2.0
    raise ValueError(f"cannot parse nonlinearity term {text!r}")


def _out(x, scalar):
    return float(x) if scalar else x


@dataclass(frozen=True)
class Nonlinearity:
    """``f(t) = sum a_j |t|^(p_j-2) t`` with every ``a_j > 0`` and ``p_j > 2``.

    Terms sharing an exponent are merged. ``p``/``q`` are the largest/smallest
    exponents and ``c0``/``b0`` their coefficients, i.e. the limits of
    ``f(t)/t^(p-1)`` at infinity and ``f(t)/t^(q-1)`` at zero.
    """

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("nonlinearity required")
        merged: dict[float, float] = {}
        for a, p in self.terms:
            a, p = float(a), float(p)
            if not (math.isfinite(a) and a > 0):
                raise ValueError(f"coefficient must be positive, got {a}")
            if not (math.isfinite(p) and p > 2):
                raise ValueError(f"exponent must exceed 2, got {p}")
            merged[p] = merged.get(p, 0.0) + a
        terms = tuple(sorted(((a, p) for p, a in merged.items()), key=lambda ap: ap[1]))
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_a", np.array([a for a, _ in terms]))
        object.__setattr__(self, "_p", np.array([p for _, p in terms]))

    @classmethod
    def power(cls, p: float, a: float = 1.0) -> "Nonlinearity":
        return cls(((a, p),))

    @classmethod
    def from_pairs(cls, pairs) -> "Nonlinearity":
        return cls(tuple((float(a), float(p)) for a, p in pairs))

    @property
    def p(self) -> float:
        return self.terms[-1][1]

    @property
    def q(self) -> float:
        return self.terms[0][1]

    @property
    def c0(self) -> float:
        return self.terms[-1][0]

    @property
    def b0(self) -> float:
        return self.terms[0][0]

    @property
    def dual_exponent(self) -> float:
        """``p / (p - 1)``, the exponent of the dual Lebesgue space."""
        return self.p / (self.p - 1.0)

    def pairs(self) -> list[list[float]]:
        return [[a, p] for a, p in self.terms]

    def describe(self) -> str:
        return " + ".join(f"{a:g}|t|^{p - 2:g}t" for a, p in self.terms)

    # f, f', F

    def f(self, t):
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        out = np.zeros_like(t)
        for a, p in self.terms:
            out = out + a * at ** (p - 1.0)
        return _out(np.copysign(out, t), scalar)

    def f_prime(self, t):
        scalar = np.ndim(t) == 0
        at = np.abs(np.asarray(t, dtype=float))
        out = np.zeros_like(at)
        for a, p in self.terms:
            out = out + a * (p - 1.0) * at ** (p - 2.0)
        return _out(out, scalar)

    def F(self, t):
        scalar = np.ndim(t) == 0
        at = np.abs(np.asarray(t, dtype=float))
        out = np.zeros_like(at)
        for a, p in self.terms:
            out = out + a * at**p / p
        return _out(out, scalar)

    # inverse and its primitive

    def _invert_abs(self, y: np.ndarray) -> np.ndarray:
        """Solve ``f(s) = y`` for ``s >= 0`` given ``y >= 0``."""
        if len(self.terms) == 1:
            a, p = self.terms[0]
            return (y / a) ** (1.0 / (p - 1.0))
        s = np.zeros_like(y)
        live = np.flatnonzero(y > 0)
        if live.size == 0:
            return s
        yl = y[live]
        # min_j (y/a_j)^(1/(p_j-1)) bounds the root from above; it tracks the
        # dominant term, so it is the (y/c0)^(1/(p-1)) guess for large y and the
        # (y/b0)^(1/(q-1)) guess for small y. f is convex on s > 0, so Newton
        # from an upper bound decreases monotonically onto the root.
        upper = np.min((yl[:, None] / self._a) ** (1.0 / (self._p - 1.0)), axis=1)
        x = upper.copy()
        todo = np.arange(yl.size)
        for _ in range(_NEWTON_MAXITER):
            xs, ys = x[todo], yl[todo]
            fx = np.zeros_like(xs)
            dfx = np.zeros_like(xs)
            for a, p in self.terms:
                xp = xs ** (p - 2.0)
                fx += a * xp * xs
                dfx += a * (p - 1.0) * xp
            res = fx - ys
            with np.errstate(divide="ignore", invalid="ignore"):
                x_new = xs - res / dfx
            # the upper bound underflows to 0 for subnormal y; keep it
            stuck = ~(x_new < xs) | ~(x_new > 0)
            done = (np.abs(res) <= 4e-16 * ys) | stuck
            x[todo] = np.where(stuck, xs, x_new)
            todo = todo[~done]
            if todo.size == 0:
                break
        else:
            logger.debug("Newton inversion stalled on %d entries; bisecting", todo.size)
            lo, hi = np.zeros(todo.size), upper[todo]
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                below = self.f(mid) < yl[todo]
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            x[todo] = 0.5 * (lo + hi)
        s[live] = x
        return s

    def h(self, t):
        """Inverse of ``f``; odd by construction."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        s = np.copysign(self._invert_abs(np.abs(t).ravel()).reshape(t.shape), t)
        bad = np.abs(self.f(s) - t) > H_TOL * (1.0 + np.abs(t))
        if np.any(bad):
            raise InversionError(f"inverse of f did not converge at t={np.asarray(t)[bad].ravel()[:3]}")
        return _out(s, scalar)

    def h_prime(self, t):
        """``1 / f'(h(t))``; singular at 0 because ``f'(0) = 0``."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        if np.any(t == 0):
            raise ZeroDivisionError("h' singular at 0")
        return _out(1.0 / self.f_prime(self.h(t)), scalar)

    def h_prime_sq(self, t):
        """``h'(t) t^2``, extended by continuity with 0 at ``t = 0``."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        nz = t != 0
        out[nz] = t[nz] ** 2 / self.f_prime(self.h(t[nz]))
        return _out(out, scalar)

    def H(self, t):
        """``int_0^t h``, evaluated as ``t h(t) - F(h(t))``."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        s = self.h(t)
        return _out(t * s - self.F(s), scalar)

    def h_and_H(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(h(t), H(t))`` sharing one inversion."""
        s = self.h(t)
        return s, t * s - self.F(s)

    # hypothesis spot-checks

    def validate(self, t_min: float = 1e-6, t_max: float = 1e6, n: int = 200) -> dict:
        """Spot-check the structural hypotheses on a log-spaced sample.

        Returns ``{name: {"passed", "worst_t", "value", ...}}``. Nothing raises.
        """
        t = np.geomspace(t_min, t_max, n)
        ft = self.f(t)
        out: dict[str, dict] = {}

        def record(name, ok, idx, value, **extra):
            out[name] = {"passed": bool(ok), "worst_t": float(t[idx]), "value": float(value), **extra}

        hi = t[-1]
        r = self.f(hi) / hi ** (self.p - 1.0)
        record("f3_limit_at_infinity", abs(r / self.c0 - 1.0) < 1e-2, n - 1, r, expected=self.c0)
        lo = t[0]
        r = self.f(lo) / lo ** (self.q - 1.0)
        record("f4_limit_at_zero", abs(r / self.b0 - 1.0) < 1e-2, 0, r, expected=self.b0)

        odd = np.abs(self.f(-t) + ft)
        record("f2_odd", np.all(odd == 0), int(np.argmax(odd)), odd.max())

        ratio = ft / t
        d = np.diff(ratio)
        record("f5_ratio_increasing", np.all(d > 0), int(np.argmin(d)), d.min())

        y = np.geomspace(t_min, t_max, n)
        hy = self.h(y)
        Hy = y * hy - self.F(hy)
        pp = self.dual_exponent
        growth = Hy / y**pp
        # H(t) <= c1 t^(p/(p-1)): the ratio must stay bounded, i.e. settle at the top end
        tail = growth[-n // 10 :]
        settled = abs(tail[-1] - tail[0]) <= 1e-2 * tail[-1]
        record("h3_upper_growth", settled and np.all(np.isfinite(growth)), int(np.argmax(growth)),
               growth.max(), c1=float(growth.max()))

        ar = Hy - 0.5 * hy * y
        da = np.diff(ar)
        record("h2_dual_ar_nonnegative", np.all(ar >= 0), int(np.argmin(ar)), ar.min())
        record("h4_dual_ar_increasing", np.all(da > 0), int(np.argmin(da)), da.min())

        hr = np.diff(hy / y)
        record("h_ratio_decreasing", np.all(hr < 0), int(np.argmax(hr)), hr.max())

        inv = np.abs(self.f(hy) - y) / (1.0 + y)
        record("inverse_pair", np.all(inv <= H_TOL), int(np.argmax(inv)), inv.max())
        return out
