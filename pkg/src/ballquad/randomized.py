"""Monte Carlo and the control-variate randomized quadrature A_n.

A_n(f) = Q_N(f - G_L f) + sum_w lambda_w f(w): plain Monte Carlo on the residual
of the filtered hyperinterpolant plus the exact integral of the hyperinterpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cubature import largest_level, rule_size
from .domain import SeededStream, sample_mu
from .hyperinterp import HyperinterpOperator, g_l_from_values, make_operator
from .orthopoly import WeightConfig

__all__ = [
    "BudgetExceeded",
    "CountingEvaluator",
    "McEstimate",
    "CvBudget",
    "cv_budget",
    "ErrorStats",
    "error_stats",
    "mc_integrate",
    "cv_integrate",
    "replicate_errors",
]


class BudgetExceeded(RuntimeError):
    pass


class CountingEvaluator:
    """Wraps an evaluator and counts point evaluations, optionally enforcing a cap."""

    def __init__(self, f, limit: int | None = None):
        self.f = f
        self.limit = limit
        self.count = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = 1 if x.ndim == 1 else len(x)
        if self.limit is not None and self.count + k > self.limit:
            raise BudgetExceeded(f"{self.count + k} evaluations requested, budget is {self.limit}")
        self.count += k
        return self.f(x)


@dataclass(frozen=True)
class McEstimate:
    value: float
    n_samples: int
    stream: SeededStream


@dataclass(frozen=True)
class CvBudget:
    n: int
    L: int
    N: int
    node_count: int

    def __post_init__(self):
        if self.node_count + self.N > self.n:
            raise ValueError("node_count + N exceeds the budget")


def cv_budget(cfg: WeightConfig, n: int, sample_fraction: float = 0.5) -> CvBudget:
    """Split n into N = floor(sample_fraction * n) samples and a rule of at most n - N nodes."""
    if n < 2:
        raise ValueError("budget n must be >= 2")
    N = math.floor(sample_fraction * n)
    L = largest_level(cfg.d, n - N)
    if L < 1 or N < 1:
        raise ValueError(f"budget n={n} too small for d={cfg.d}: no level fits in {n - N} nodes")
    return CvBudget(n, L, N, rule_size(cfg.d, 3 * L))


@dataclass(frozen=True)
class ErrorStats:
    per_replication_abs_errors: tuple
    mean_abs_error: float
    std_error: float
    replication_count: int


def error_stats(errors) -> ErrorStats:
    """Fixed-order compensated mean and standard error of the mean."""
    errs = tuple(float(e) for e in errors)
    k = len(errs)
    mean = math.fsum(errs) / k
    var = math.fsum((e - mean) ** 2 for e in errs) / (k - 1) if k > 1 else 0.0
    return ErrorStats(errs, mean, math.sqrt(var / k), k)


def _values(f, x) -> np.ndarray:
    return np.asarray(f(x), dtype=float).reshape(len(x))


def mc_integrate(cfg: WeightConfig, h, N: int, stream: SeededStream) -> McEstimate:
    if N < 1:
        raise ValueError("N must be >= 1")
    x = sample_mu(cfg, stream, N)
    return McEstimate(math.fsum(_values(h, x)) / N, N, stream)


def cv_integrate(cfg: WeightConfig, f, budget: CvBudget, op: HyperinterpOperator, stream: SeededStream) -> float:
    """One draw of A_n(f); f is called on at most budget.n points (hard failure otherwise)."""
    if op.L != budget.L:
        raise ValueError(f"operator level {op.L} does not match budget level {budget.L}")
    if len(op.rule) != budget.node_count:
        raise ValueError("operator rule size does not match the budget")
    counted = CountingEvaluator(f, limit=budget.n)
    node_vals = _values(counted, op.rule.nodes)
    surrogate = g_l_from_values(op, node_vals)
    exact_part = math.fsum(op.rule.weights * node_vals)
    x = sample_mu(cfg, stream, budget.N)
    resid = _values(counted, x) - np.asarray(surrogate(x), dtype=float)
    return math.fsum(resid) / budget.N + exact_part


def replicate_errors(
    cfg: WeightConfig,
    f,
    true_value: float,
    method: str,
    n: int,
    reps: int,
    master_seed: int,
    op: HyperinterpOperator | None = None,
) -> ErrorStats:
    """|true_value - estimate| over streams (master_seed, 0 .. reps-1)."""
    if reps < 2:
        raise ValueError("reps must be >= 2")
    streams = [SeededStream(master_seed, i) for i in range(reps)]
    if method == "mc":
        ests = [mc_integrate(cfg, f, n, s).value for s in streams]
    elif method == "cv":
        budget = cv_budget(cfg, n)
        if op is None or op.L != budget.L:
            op = make_operator(cfg, budget.L)
        ests = [cv_integrate(cfg, f, budget, op, s) for s in streams]
    else:
        raise ValueError(f"unknown randomized method {method!r}")
    return error_stats(abs(true_value - e) for e in ests)
