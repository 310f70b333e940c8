"""Command-line driver: ``biharm-dual <config> [--key value ...]``.

The config file is line oriented ``key = value`` text. ``#`` starts a comment
and the nonlinearity is given by repeated ``term = a, p`` lines. Flags mirror
the config keys and override them. Exit codes: 0 success, 1 configuration
error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dual import make_context
from .grid import BC, Field, Grid2D
from .nehari import ProjectionError, cross_term_inequality, fibering_jacobian
from .nonlinearity import Nonlinearity, parse_term
from .operator import bilinear_T
from .solver import SolveError, SolveReport, SolverConfig, solve_ground_state, solve_nodal

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main"]

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 1, 2
MODES = ("ground", "nodal", "both", "validate")

_INT_KEYS = {"nx", "ny", "max_iters", "n_starts", "seed"}
_FLOAT_KEYS = {"lx", "ly", "step0", "armijo_c", "armijo_shrink", "tol_residual", "tol_defect", "perturbation"}
_STR_KEYS = {"bc", "mode", "output", "metric"}
KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | {"term"}
_SOLVER_KEYS = ("max_iters", "step0", "armijo_c", "armijo_shrink", "tol_residual", "tol_defect",
                "n_starts", "seed", "metric", "perturbation")


class ConfigError(ValueError):
    """Carries every diagnostic found, each prefixed with its line number."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("\n".join(diagnostics))
        self.diagnostics = list(diagnostics)


@dataclass(frozen=True)
class RunConfig:
    grid: Grid2D
    nl: Nonlinearity
    solver: SolverConfig = field(default_factory=SolverConfig)
    mode: str = "both"
    output: str = "out"

    def echo(self) -> dict:
        g = self.grid
        return {
            "nx": g.nx, "ny": g.ny, "lx": g.lx, "ly": g.ly, "bc": g.bc.value,
            "terms": self.nl.pairs(),
            "mode": self.mode,
            "output": self.output,
            "solver": asdict(self.solver),
        }


def _convert(key: str, raw: str):
    if key in _INT_KEYS:
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"{key} must be an integer, got {raw!r}")
        return int(value)
    if key in _FLOAT_KEYS:
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError(f"{key} must be finite, got {raw!r}")
        return value
    return raw.strip().lower() if key in ("bc", "mode", "metric") else raw.strip()


def _lines_to_entries(text: str) -> tuple[list[tuple[int, str, str]], list[str]]:
    entries, diags = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            diags.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        entries.append((lineno, key.lower(), value))
    return entries, diags


def build_config(entries: list[tuple[int, str, str]], diags: list[str] | None = None) -> RunConfig:
    """Validate ``(lineno, key, value)`` triples into a :class:`RunConfig`."""
    diags = list(diags or [])
    values: dict = {}
    terms: list[tuple[float, float]] = []
    for lineno, key, raw in entries:
        where = f"line {lineno}" if lineno > 0 else "flag"
        if key not in KEYS:
            diags.append(f"{where}: unknown key {key!r}")
            continue
        try:
            if key == "term":
                a, p = parse_term(raw)
                if not a > 0:
                    raise ValueError(f"coefficient must be positive, got {a:g}")
                if not p > 2:
                    raise ValueError(f"exponent must exceed 2, got {p:g}")
                terms.append((a, p))
            else:
                values[key] = _convert(key, raw)
        except ValueError as exc:
            diags.append(f"{where}: {exc}")

    if not terms:
        diags.append("nonlinearity required (add a 'term = a, p' line)")
    mode = values.get("mode", "both")
    if mode not in MODES:
        diags.append(f"mode must be one of {', '.join(MODES)}, got {mode!r}")

    grid = nl = solver = None
    try:
        grid = Grid2D(values.get("nx", 33), values.get("ny", values.get("nx", 33)),
                      values.get("lx", 1.0), values.get("ly", 1.0), values.get("bc", BC.NAVIER))
    except ValueError as exc:
        diags.append(f"grid: {exc}")
    if terms:
        try:
            nl = Nonlinearity(tuple(terms))
        except ValueError as exc:
            diags.append(f"nonlinearity: {exc}")
    try:
        solver = SolverConfig(**{k: values[k] for k in _SOLVER_KEYS if k in values})
    except ValueError as exc:
        diags.append(f"solver: {exc}")
    if diags:
        raise ConfigError(diags)
    return RunConfig(grid, nl, solver, mode, values.get("output", "out"))


def parse_config(text: str) -> RunConfig:
    """Parse config text; raises :class:`ConfigError` listing every problem."""
    entries, diags = _lines_to_entries(text)
    return build_config(entries, diags)


# output writers


def _write_field(path: Path, f: Field) -> None:
    x, y = f.grid.coordinates()
    with open(path, "w", newline="\n") as fh:
        fh.write("x,y,value\n")
        for row in zip(x, y, f.values):
            fh.write("%.17g,%.17g,%.17g\n" % row)


def _write_trace(path: Path, trace) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("iter,psi,residual,step\n")
        for k, (val, res, step) in enumerate(trace, start=1):
            fh.write("%d,%.17g,%.17g,%.17g\n" % (k, val, res, step))


def _dump_json(path: Path, payload) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, allow_nan=True)
        fh.write("\n")


def _nodal_checks(ctx, rep: SolveReport) -> dict:
    wp = Field(ctx.grid, np.maximum(rep.w.values, 0.0))
    wm = Field(ctx.grid, np.minimum(rep.w.values, 0.0))
    _, det = fibering_jacobian(ctx, rep.w)
    c2, ab = cross_term_inequality(ctx, rep.w)
    return {
        "jacobian_det": det,
        "jacobian_det_negative": bool(det < 0),
        "cross_term_sq": c2,
        "cross_term_bound": ab,
        "cross_term_strict": bool(c2 < ab),
        "quadratic_form": bilinear_T(ctx.op, rep.w, rep.w),
        "quadratic_form_plus": bilinear_T(ctx.op, wp, wp),
        "quadratic_form_minus": bilinear_T(ctx.op, wm, wm),
    }


def _validate(cfg: RunConfig, out: Path) -> int:
    ctx = make_context(cfg.grid, cfg.nl)
    rng = np.random.default_rng(cfg.solver.seed)
    sym, form = 0.0, np.inf
    for _ in range(20):
        a, b = rng.standard_normal((2, cfg.grid.size))
        ab, ba = ctx.dot(a, ctx.T(b)), ctx.dot(b, ctx.T(a))
        sym = max(sym, abs(ab - ba) / max(abs(ab), abs(ba), 1e-300))
        form = min(form, ctx.dot(a, ctx.T(a)))
    # columns of T at a corner node and the centre node
    cols = [0, (cfg.grid.ny // 2) * cfg.grid.nx + cfg.grid.nx // 2]
    min_entry = min(float(np.min(ctx.T(np.eye(1, cfg.grid.size, k).ravel()))) for k in cols)
    payload = {
        "config": cfg.echo(),
        "nonlinearity": cfg.nl.validate(),
        "operator": {
            "symmetry_defect": sym,
            "symmetry_ok": bool(sym <= 1e-10),
            "min_quadratic_form": form,
            "positive_definite_ok": bool(form > 0),
            "min_column_entry": min_entry,
            "entrywise_positive": bool(min_entry > 0),
        },
    }
    _dump_json(out / "validate.json", payload)
    return EXIT_OK


def run(cfg: RunConfig) -> int:
    """Execute the configured solves and write the result files."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode == "validate":
        return _validate(cfg, out)

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    ctx = make_context(cfg.grid, cfg.nl)
    timings["factorize"] = time.perf_counter() - t0

    sections: dict[str, dict | None] = {"ground": None, "nodal": None}
    checks: dict = {"energy_ordering_ok": None}
    status = EXIT_OK
    todo = ("ground", "nodal") if cfg.mode == "both" else (cfg.mode,)
    results: dict[str, SolveReport] = {}
    for kind in todo:
        solve = solve_ground_state if kind == "ground" else solve_nodal
        t0 = time.perf_counter()
        try:
            rep = solve(ctx, cfg.solver)
        except SolveError as exc:
            logger.error("%s solve failed: %s", kind, exc)
            status = EXIT_NONCONVERGED
            rep = exc.report
        timings[kind] = time.perf_counter() - t0
        if rep is None:
            continue
        results[kind] = rep
        sections[kind] = rep.scalars()
        _write_field(out / f"field_{kind}_w.csv", rep.w)
        _write_field(out / f"field_{kind}_u.csv", rep.u)
        _write_trace(out / f"trace_{kind}.csv", rep.trace)

    if "ground" in results:
        checks["ground_one_signed"] = results["ground"].classification is not None and \
            results["ground"].classification.value in ("positive", "negative")
    if "nodal" in results:
        try:
            checks.update(_nodal_checks(ctx, results["nodal"]))
        except ProjectionError as exc:
            logger.error("nodal checks skipped: %s", exc)
    if "ground" in results and "nodal" in results:
        checks["energy_ordering_ok"] = bool(results["nodal"].psi >= results["ground"].psi - 1e-8)

    report = {"config": cfg.echo(), "ground": sections["ground"], "nodal": sections["nodal"],
              "checks": checks, "timings": timings}
    _dump_json(out / "report.json", report)
    return status


def _argument_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="biharm-dual", description="Dual-method ground and nodal states of Delta^2 u = f(u).")
    ap.add_argument("config", help="key = value config file")
    for key in sorted(KEYS - {"term"}):
        ap.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar=key.upper())
    ap.add_argument("--term", action="append", metavar="'a, p'",
                    help="nonlinearity term; when given, replaces the terms of the file")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _argument_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"biharm-dual: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    entries, diags = _lines_to_entries(text)
    if args.term:
        entries = [e for e in entries if e[1] != "term"] + [(0, "term", t) for t in args.term]
    for key in sorted(KEYS - {"term"}):
        value = getattr(args, key)
        if value is not None:
            entries = [e for e in entries if e[1] != key] + [(0, key, value)]
    try:
        cfg = build_config(entries, diags)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"biharm-dual: {d}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
