"""Filtered hyperinterpolation G_L: approximation from values at cubature nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cubature import CubatureRule, build_rule
from .domain import separated_set
from .filtering import Filter, FilteredKernel, default_filter
from .orthopoly import WeightConfig
from .spectral import BandlimitedFunction, orthonormal_basis

__all__ = [
    "HyperinterpOperator",
    "make_operator",
    "g_l_apply",
    "g_l_from_values",
    "int_of_g_l",
    "lebesgue_estimate",
    "probe_points",
]


@dataclass(frozen=True)
class HyperinterpOperator:
    L: int
    rule: CubatureRule
    kernel: FilteredKernel
    cfg: WeightConfig

    def __post_init__(self):
        if self.rule.exactness_degree < 3 * self.L:
            raise ValueError(f"G_{self.L} needs a rule exact to degree {3 * self.L}")

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    def __call__(self, f) -> BandlimitedFunction:
        return g_l_apply(self, f)

    @cached_property
    def node_basis(self) -> np.ndarray:
        """Orthonormal basis of Pi_{2L-1} at the nodes, scaled by the filter weights."""
        basis = orthonormal_basis(self.cfg, self.kernel.degree)
        return basis(self.rule.nodes) * self.kernel.weights[basis.degrees]


def make_operator(cfg: WeightConfig, L: int, filt: Filter | None = None) -> HyperinterpOperator:
    filt = default_filter() if filt is None else filt
    return HyperinterpOperator(L, build_rule(cfg, 3 * L), FilteredKernel(L, filt, cfg), cfg)


def g_l_from_values(op: HyperinterpOperator, values) -> BandlimitedFunction:
    """G_L f from the node values f(w); the kernel sum is factored through the basis."""
    values = np.asarray(values, dtype=float).reshape(len(op.rule))
    c = op.node_basis.T @ (op.rule.weights * values)
    return BandlimitedFunction.from_coefficients(op.cfg, c, op.kernel.degree, label=f"G_{op.L}")


def g_l_apply(op: HyperinterpOperator, f) -> BandlimitedFunction:
    """x -> sum_w lambda_w f(w) K_{L,eta}(x, w); f is evaluated at the rule nodes only."""
    return g_l_from_values(op, f(op.rule.nodes))


def int_of_g_l(op: HyperinterpOperator, f) -> float:
    """Integral of G_L f, which equals the cubature sum of f (K has mean one in y)."""
    vals = np.asarray(f(op.rule.nodes), dtype=float).reshape(len(op.rule))
    return float(math.fsum(op.rule.weights * vals))


def probe_points(cfg: WeightConfig, count: int) -> np.ndarray:
    """Deterministic separated set with roughly ``count`` points."""
    # half the volume of S^d over the volume of a d-ball of radius eps/2 ~ count
    half_sphere = math.pi ** ((cfg.d + 1) / 2) / math.gamma((cfg.d + 1) / 2)
    unit_ball = math.pi ** (cfg.d / 2) / math.gamma(cfg.d / 2 + 1)
    eps = min(math.pi, 2.0 * (half_sphere / (unit_ball * max(count, 1))) ** (1.0 / cfg.d))
    res = max(4, math.ceil(math.pi / eps))
    return separated_set(cfg, eps, res).points


def lebesgue_estimate(op: HyperinterpOperator, probe_count: int, chunk: int = 1024) -> float:
    """max over probes x of sum_w lambda_w |K_{L,eta}(x, w)|.

    Probes are a separated set of about ``probe_count`` points together with the
    rule nodes; the result is a lower bound for the operator norm of G_L on C(B^d).
    """
    if probe_count < 1:
        raise ValueError("probe_count must be >= 1")
    probes = np.concatenate([probe_points(op.cfg, probe_count), op.rule.nodes])
    basis = orthonormal_basis(op.cfg, op.kernel.degree)
    best = 0.0
    for s in range(0, len(probes), chunk):
        K = basis(probes[s : s + chunk]) @ op.node_basis.T
        best = max(best, float(np.max(np.abs(K) @ op.rule.weights)))
    return best
