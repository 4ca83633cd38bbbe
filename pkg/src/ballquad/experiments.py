"""Convergence experiments and plot-ready report files."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CorpusFunction
from .cubature import largest_level
from .hyperinterp import g_l_apply, int_of_g_l, make_operator, probe_points
from .orthopoly import WeightConfig
from .randomized import cv_budget, replicate_errors

__all__ = [
    "DEFAULT_N_GRID",
    "DEFAULT_REPS",
    "ReportRow",
    "ExperimentReport",
    "fit_slope",
    "run_convergence",
    "run_approximation",
    "render_report",
    "emit_report",
    "parse_report",
]

DEFAULT_N_GRID = tuple(2**k for k in range(6, 13))
DEFAULT_REPS = 200
CSV_HEADER = "n,method,mean_abs_error,std_error,reps"


@dataclass(frozen=True)
class ReportRow:
    n: int
    method: str
    mean_abs_error: float
    std_error: float
    reps: int


@dataclass(frozen=True)
class ExperimentReport:
    d: int
    mu: float
    r: float
    p: float
    method: str
    seed: int
    function: str
    rows: tuple = ()
    fitted_slope: float = math.nan
    slope_stderr: float = math.nan
    extra: dict = field(default_factory=dict, compare=False)


def fit_slope(xs, ys) -> tuple[float, float]:
    """Least-squares slope of log y against log x and its standard error (nan if undefined)."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    if len(xs) < 2 or np.any(ys <= 0) or np.any(xs <= 0):
        return math.nan, math.nan
    lx, ly = np.log(xs), np.log(ys)
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    if len(xs) == 2:
        return float(coef[0]), math.nan
    resid = ly - A @ coef
    s2 = float(resid @ resid) / (len(xs) - 2)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    return float(coef[0]), math.sqrt(s2 / sxx)


def _check_grid(n_grid) -> list[int]:
    grid = [int(n) for n in n_grid]
    if len(grid) < 4:
        raise ValueError("n_grid needs at least 4 budgets")
    ratios = [b / a for a, b in zip(grid, grid[1:])]
    if min(ratios) <= 1 or max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise ValueError(f"n_grid must be geometric and increasing, got {grid}")
    return grid


def run_convergence(
    cfg: WeightConfig,
    f: CorpusFunction,
    method: str,
    n_grid=DEFAULT_N_GRID,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    p: float = math.inf,
) -> ExperimentReport:
    """Mean absolute integration error of ``method`` at each budget n, with a fitted log-log slope.

    det: cubature sum of the hyperinterpolant at the largest level whose rule has
    at most n nodes (reps = 1). mc: Q_n. cv: A_n with the half/half split.
    Each budget uses its own seed stream family (seed + budget index) so that
    rows are independent.
    """
    grid = _check_grid(n_grid)
    if method not in ("det", "mc", "cv"):
        raise ValueError(f"unknown method {method!r}")
    if method != "det" and reps < 50:
        raise ValueError("randomized methods need reps >= 50")
    rows, levels = [], []
    for k, n in enumerate(grid):
        if method == "det":
            L = largest_level(cfg.d, n)
            if L < 1:
                raise ValueError(f"no rule of degree >= 3 fits in {n} nodes for d={cfg.d}")
            err = abs(f.integral - int_of_g_l(make_operator(cfg, L), f))
            rows.append(ReportRow(n, method, err, 0.0, 1))
            levels.append(L)
        else:
            stats = replicate_errors(cfg, f, f.integral, method, n, reps, seed + k)
            rows.append(ReportRow(n, method, stats.mean_abs_error, stats.std_error, reps))
            if method == "cv":
                levels.append(cv_budget(cfg, n).L)
    slope, se = fit_slope([r.n for r in rows], [r.mean_abs_error for r in rows])
    return ExperimentReport(
        cfg.d, cfg.mu, f.smoothness, p, method, seed, f.name, tuple(rows), slope, se, {"levels": levels}
    )


def run_approximation(cfg: WeightConfig, f: CorpusFunction, levels=(4, 8, 16, 32), probe_count: int = 2000, seed: int = 0) -> ExperimentReport:
    """sup-norm error of G_L f on probe points and rule nodes, one row per L (in the n column)."""
    X = probe_points(cfg, probe_count)
    rows = []
    for L in levels:
        op = make_operator(cfg, L)
        g = g_l_apply(op, f)
        pts = np.concatenate([X, op.rule.nodes])
        rows.append(ReportRow(int(L), "approx", float(np.max(np.abs(f(pts) - g(pts)))), 0.0, 1))
    slope, se = fit_slope([r.n for r in rows], [r.mean_abs_error for r in rows])
    return ExperimentReport(cfg.d, cfg.mu, f.smoothness, math.inf, "approx", seed, f.name, tuple(rows), slope, se)


def _num(v: float) -> str:
    return format(v, ".17g")


def _json_num(v: float):
    return None if isinstance(v, float) and not math.isfinite(v) else v


def render_report(report: ExperimentReport, fmt: str = "csv") -> str:
    """CSV (header, rows, footer comment) or JSON text; a pure function of the report."""
    if fmt == "csv":
        lines = [CSV_HEADER]
        for r in report.rows:
            lines.append(f"{r.n},{r.method},{_num(r.mean_abs_error)},{_num(r.std_error)},{r.reps}")
        lines.append(f"# slope={_num(report.fitted_slope)} stderr={_num(report.slope_stderr)} seed={report.seed}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {
            "config": {
                "d": report.d,
                "mu": report.mu,
                "r": _json_num(report.r),
                "p": "inf" if math.isinf(report.p) else report.p,
                "method": report.method,
                "seed": report.seed,
                "function": report.function,
            },
            "rows": [asdict(r) for r in report.rows],
            "fitted_slope": _json_num(report.fitted_slope),
            "slope_stderr": _json_num(report.slope_stderr),
            "seed": report.seed,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(report: ExperimentReport, path, fmt: str = "csv") -> None:
    """Write ``render_report`` output to ``path``; files are byte-stable for a fixed seed."""
    path = Path(path)
    text = render_report(report, fmt)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def parse_report(path) -> dict:
    """Read a CSV or JSON report back into {'rows': [...], 'fitted_slope', 'slope_stderr', 'seed'}."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        nan = lambda v: math.nan if v is None else v
        return {
            "rows": [ReportRow(**r) for r in doc["rows"]],
            "fitted_slope": nan(doc["fitted_slope"]),
            "slope_stderr": nan(doc["slope_stderr"]),
            "seed": doc["seed"],
        }
    lines = text.splitlines()
    if lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a report file")
    rows, footer = [], {}
    for line in lines[1:]:
        if line.startswith("#"):
            footer.update(tok.split("=", 1) for tok in line[1:].split())
            continue
        n, method, err, se, reps = line.split(",")
        rows.append(ReportRow(int(n), method, float(err), float(se), int(reps)))
    return {
        "rows": rows,
        "fitted_slope": float(footer["slope"]),
        "slope_stderr": float(footer["stderr"]),
        "seed": int(footer["seed"]),
    }
