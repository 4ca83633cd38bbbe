"""Test functions with controlled smoothness and certified reference integrals.

Lacunary members are sums of ridge Chebyshev polynomials

    f(x) = sum_{j=0}^{J} 2^{-jr} T_{2^j}(<x, y_j>),   |y_j| = 1,

each term flat on the ball (sup norm 1, L2 norm of the same order) and of
degree 2^j, so the best approximation error from Pi_{2^i} decays like 2^{-ir}.
For a unit vector y the ridge function C_m^lam(<x, y>), lam = mu + (d-1)/2, is
the reproducing kernel P_m(x, y) up to a constant and lies in V_m. Expanding T_n
in Gegenbauer polynomials therefore gives both the exact integral and V_L of
every term in closed form.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .cubature import CertificationError, build_rule
from .domain import SeededStream
from .filtering import Filter, default_filter
from .orthopoly import WeightConfig, gegenbauer_table
from .spectral import orthonormal_basis

__all__ = [
    "CORPUS_SEED",
    "chebyshev_to_gegenbauer",
    "RidgeSum",
    "CorpusFunction",
    "parse_tag",
    "build_corpus",
    "certify_decay",
]

CORPUS_SEED = 20240611
# lacunary sums stop once 2^{-Jr} falls below this
_TAIL = 1e-10


def chebyshev_to_gegenbauer(n: int, lam: float, mmax: int | None = None) -> np.ndarray:
    """a[m] with T_n = sum_m a[m] C_m^lam, for m = 0..min(n, mmax).

    Uses a[n - 2j] = (n/2) (lam + n - 2j) Gamma(lam) (-lam)_j Gamma(n - j) / (j! Gamma(n - j + lam + 1)).
    """
    if lam <= 0:
        raise ValueError("lam must be positive (T_n itself is the lam -> 0 family)")
    top = n if mmax is None else min(n, mmax)
    a = np.zeros(top + 1)
    if n == 0:
        a[0] = 1.0
        return a
    j = np.arange(n // 2 + 1)
    # (-lam)_j as sign and log magnitude; exact zeros when lam is a small integer
    factors = -lam + np.arange(n // 2)
    zero_after = np.flatnonzero(factors == 0.0)
    logs = np.concatenate([[0.0], np.cumsum(np.log(np.abs(np.where(factors == 0, 1.0, factors))))])
    signs = np.concatenate([[1.0], np.cumprod(np.sign(np.where(factors == 0, 1.0, factors)))])
    if len(zero_after):
        signs[zero_after[0] + 1 :] = 0.0
    log_mag = (
        math.log(n / 2.0)
        + np.log(lam + n - 2 * j)
        + gammaln(lam)
        + logs
        + gammaln(n - j)
        - gammaln(j + 1)
        - gammaln(n - j + lam + 1)
    )
    m = n - 2 * j
    keep = m <= top
    a[m[keep]] = signs[keep] * np.exp(log_mag[keep])
    return a


def _cheb(n, t):
    return np.cos(n * np.arccos(np.clip(t, -1.0, 1.0)))


@dataclass(frozen=True)
class RidgeSum:
    """x -> sum_k amplitudes[k] T_{degrees[k]}(<x, directions[k]>)."""

    cfg: WeightConfig
    directions: np.ndarray  # (K, d) unit vectors
    degrees: tuple
    amplitudes: tuple

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        t = np.atleast_2d(X) @ self.directions.T
        out = _cheb(np.asarray(self.degrees, dtype=float), t) @ np.asarray(self.amplitudes)
        return float(out[0]) if single else out

    @property
    def degree(self) -> int:
        return max(self.degrees)

    def _mean_of_term(self, n: int) -> float:
        lam = self.cfg.lam
        if n % 2:
            return 0.0
        if lam == 0:
            return 1.0 if n == 0 else 0.0
        return float(chebyshev_to_gegenbauer(n, lam, 0)[0])

    def integral(self) -> float:
        """Exact integral against w_mu: only the V_0 component of each term survives."""
        return math.fsum(a * self._mean_of_term(n) for n, a in zip(self.degrees, self.amplitudes))

    def filtered_residual(self, X, L: int, filt: Filter | None = None) -> np.ndarray:
        """(f - V_L f)(X) in closed form."""
        filt = default_filter() if filt is None else filt
        w = filt.level_weights(L)
        mtop = len(w) - 1
        lam = self.cfg.lam
        t = np.atleast_2d(np.asarray(X, dtype=float)) @ self.directions.T
        out = np.zeros(t.shape[0])
        for k, (n, a) in enumerate(zip(self.degrees, self.amplitudes)):
            if n <= L:
                continue  # V_L reproduces Pi_L
            if lam == 0:
                kept = (w[n] if n <= mtop else 0.0) * _cheb(n, t[:, k])
            else:
                c = chebyshev_to_gegenbauer(n, lam, mtop)
                kept = gegenbauer_table(len(c) - 1, lam, t[:, k]) @ (c * w[: len(c)])
            out += a * (_cheb(n, t[:, k]) - kept)
        return out


@dataclass(frozen=True)
class CorpusFunction:
    name: str
    evaluator: Callable = field(repr=False)
    smoothness: float
    class_tag: str
    integral: float
    certificate: dict = field(default_factory=dict, compare=False)

    def __call__(self, X):
        return self.evaluator(X)


_TAG = re.compile(r"^(analytic|lacunary|bump|polynomial)(?:\(([^)]*)\))?$")


def parse_tag(tag: str) -> tuple[str, float | None]:
    m = _TAG.match(tag.strip())
    if not m:
        raise ValueError(f"unknown corpus tag {tag!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "analytic":
        return kind, None
    if arg is None:
        raise ValueError(f"tag {tag!r} needs a parameter")
    return kind, float(arg)


def _directions(d: int, count: int, seed: int) -> np.ndarray:
    g = SeededStream(seed, 0).generator().standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _probe_cloud(cfg: WeightConfig) -> np.ndarray:
    from .hyperinterp import probe_points

    return probe_points(cfg, 2000)


def certify_decay(cfg: WeightConfig, f: RidgeSum, r: float, levels=tuple(range(1, 11)), filt: Filter | None = None) -> dict:
    """Measure e_i = ||f - V_{2^i} f||_inf on a probe set.

    Passes when 2^{ir} e_i stays within a factor 4 across i and the fitted decay
    exponent is within 0.3 of r. Small levels are pre-asymptotic (partial
    Gegenbauer sums of T_n overshoot), hence the long default range.
    """
    X = _probe_cloud(cfg)
    errs = [float(np.max(np.abs(f.filtered_residual(X, 2**i, filt)))) for i in levels]
    scaled = [e * 2.0 ** (i * r) for e, i in zip(errs, levels)]
    slope = -np.polyfit(np.array(levels) * math.log(2.0), np.log(errs), 1)[0]
    spread = max(scaled) / min(scaled)
    return {
        "levels": list(levels),
        "errors": errs,
        "decay_exponent": float(slope),
        "spread": float(spread),
        "passed": bool(spread <= 4.0 and abs(slope - r) <= 0.3),
    }


def _lacunary(cfg: WeightConfig, r: float, seed: int) -> CorpusFunction:
    if r <= 0:
        raise ValueError("lacunary smoothness must be positive")
    J = math.ceil(math.log2(1.0 / _TAIL) / r)
    ridge = RidgeSum(
        cfg,
        _directions(cfg.d, J + 1, seed),
        tuple(2**j for j in range(J + 1)),
        tuple(2.0 ** (-j * r) for j in range(J + 1)),
    )
    cert = certify_decay(cfg, ridge, r)
    return CorpusFunction(f"lacunary({r:g})", ridge, r, f"lacunary({r:g})", ridge.integral(), cert)


def _analytic(cfg: WeightConfig) -> CorpusFunction:
    f = lambda X: np.exp(np.atleast_2d(np.asarray(X, dtype=float))[:, 0])
    lo, hi = build_rule(cfg, 40).integrate(f), build_rule(cfg, 80).integrate(f)
    if abs(lo - hi) > 1e-12 * abs(hi):
        raise CertificationError(f"reference integral of exp(x1) unstable: {lo!r} vs {hi!r}")
    return CorpusFunction("analytic(exp x1)", f, math.inf, "analytic", hi, {"degree_40": lo, "degree_80": hi, "passed": True})


def _polynomial(cfg: WeightConfig, N: int, seed: int) -> CorpusFunction:
    basis = orthonormal_basis(cfg, N)
    c = SeededStream(seed, 1).generator().standard_normal(len(basis))
    f = lambda X: basis(np.atleast_2d(np.asarray(X, dtype=float))) @ c
    # only the constant basis function has nonzero mean; it equals 1 for a probability measure
    integral = float(c[0] * basis(np.zeros((1, cfg.d)))[0, 0])
    return CorpusFunction(f"polynomial({N})", f, math.inf, f"polynomial({N})", integral, {"passed": True})


def _bump(cfg: WeightConfig, m: int) -> CorpusFunction:
    from .adversarial import FoolingFunction, bump_integrals, build_bump_system

    system = build_bump_system(cfg, 0, m)
    f = FoolingFunction(system, np.ones(len(system), dtype=int))
    lo, hi = math.fsum(bump_integrals(system)), math.fsum(bump_integrals(system, refine=2))
    if abs(lo - hi) > 1e-10 * abs(hi):
        raise CertificationError(f"bump({m}) integral unstable: {lo!r} vs {hi!r}")
    return CorpusFunction(f"bump({m})", f, math.inf, f"bump({m})", hi, {"passed": True})


def build_corpus(cfg: WeightConfig, tags, seed: int = CORPUS_SEED, strict: bool = True) -> list[CorpusFunction]:
    """Deterministic corpus members for the given class tags.

    With ``strict`` a failed certification raises CertificationError naming the
    members; otherwise the failures are left in each member's certificate.
    """
    out = []
    for tag in tags:
        kind, arg = parse_tag(tag)
        if kind == "analytic":
            out.append(_analytic(cfg))
        elif kind == "lacunary":
            out.append(_lacunary(cfg, arg, seed))
        elif kind == "polynomial":
            if arg < 0 or arg != int(arg):
                raise ValueError("polynomial degree must be a nonnegative integer")
            out.append(_polynomial(cfg, int(arg), seed))
        else:
            if arg != int(arg):
                raise ValueError("bump scale must be an integer")
            out.append(_bump(cfg, int(arg)))
    failed = [f.name for f in out if not f.certificate.get("passed", False)]
    if strict and failed:
        raise CertificationError(f"corpus certification failed for {', '.join(failed)}")
    return out
