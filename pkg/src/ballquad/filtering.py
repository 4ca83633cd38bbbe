"""Smooth filters, filtered kernels K_{L,eta} and the filtered operator V_L."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cubature import CubatureRule
from .orthopoly import WeightConfig
from .spectral import BandlimitedFunction, analysis, kernel_matrix, orthonormal_basis, zonal_kernel

__all__ = ["Filter", "default_filter", "eta_eval", "FilteredKernel", "filtered_kernel_eval", "v_l_apply"]


def _g(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)


def smooth_step(t):
    """C-infinity step: 1 for t <= 1, 0 for t >= 2, g(2-t)/(g(2-t)+g(t-1)) between."""
    t = np.asarray(t, dtype=float)
    a, b = _g(2.0 - t), _g(t - 1.0)
    return a / (a + b)


@dataclass(frozen=True)
class Filter:
    evaluator: Callable = smooth_step
    support_hi: float = 2.0
    name: str = "exp-mollifier"

    def __call__(self, t):
        out = self.evaluator(t)
        return float(out) if np.ndim(out) == 0 else out

    def level_weights(self, L: int) -> np.ndarray:
        """eta(k/L) for k = 0 .. ceil(support_hi * L) - 1."""
        K = math.ceil(self.support_hi * L)
        return np.asarray(self.evaluator(np.arange(K) / L), dtype=float)


def default_filter() -> Filter:
    return Filter()


def eta_eval(filt: Filter, t):
    if np.any(np.asarray(t) < 0):
        raise ValueError("filter argument must be >= 0")
    return filt(t)


@dataclass(frozen=True)
class FilteredKernel:
    """K_{L,eta}(x, y) = sum_{k < 2L} eta(k/L) P_k(x, y)."""

    L: int
    filter: Filter
    cfg: WeightConfig
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        object.__setattr__(self, "weights", self.filter.level_weights(self.L))

    @property
    def degree(self) -> int:
        return len(self.weights) - 1

    def __call__(self, x, y):
        """Pointwise evaluation (broadcasting) by the closed-form kernel."""
        out = zonal_kernel(self.cfg, self.weights, x, y)
        return float(out) if np.ndim(out) == 0 else out

    def matrix(self, X, Y) -> np.ndarray:
        """All pairs K(x_i, y_j) through the orthonormal basis."""
        return kernel_matrix(self.cfg, X, Y, self.weights)


def filtered_kernel_eval(K: FilteredKernel, x, y):
    return K(x, y)


def v_l_apply(cfg: WeightConfig, f: BandlimitedFunction, L: int, filt: Filter, rule: CubatureRule) -> BandlimitedFunction:
    """V_L f(x) = <f, K_{L,eta}(x, .)> for band-limited f, computed with an exact rule.

    Only degrees up to min(2L - 1, deg f) can carry mass, so the rule must be
    exact to deg f + min(2L - 1, deg f).
    """
    w = filt.level_weights(L)
    n = min(len(w) - 1, f.degree)
    need = f.degree + n
    if rule.exactness_degree < need:
        raise ValueError(f"V_{L} of a degree-{f.degree} function needs exactness {need}, rule has {rule.exactness_degree}")
    basis = orthonormal_basis(cfg, n)
    c = analysis(cfg, f, rule, n) * w[basis.degrees]
    return BandlimitedFunction.from_coefficients(cfg, c, n, label=f"V_{L} {f.label}".strip())
