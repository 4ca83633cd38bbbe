"""Orthogonal structure of L2(w_mu): reproducing kernels, projections,
fractional powers of the ball Laplacian and norms of band-limited functions.

Two independent routes to the kernels P_n(x, y) are provided:

* ``kernel_eval``/``zonal_kernel``: the closed form
  (n+lam)/lam * c * int C_n^lam(x.y + t sqrt(1-|x|^2) sqrt(1-|y|^2)) (1-t^2)^(mu-1) dt,
  integrated exactly by Gauss-Jacobi (two-point boundary limit at mu = 0);
* ``OrthonormalBasis``: the product basis built from Gegenbauer polynomials in
  successive coordinates, used for bulk kernel matrices and coefficient
  representations because it turns kernel sums into matrix products.

``gram_schmidt_kernel`` orthonormalizes monomials with an exact cubature Gram
matrix; it is the reference both routes are checked against.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .cubature import CubatureRule, build_rule
from .domain import clamp_to_ball, hemisphere_grid
from .orthopoly import WeightConfig, gauss_jacobi, log_beta, orthonormal_jacobi, zonal_table

__all__ = [
    "NormAccuracyError",
    "dim_v",
    "dim_pi",
    "kernel_eval",
    "zonal_kernel",
    "gram_schmidt_kernel",
    "OrthonormalBasis",
    "orthonormal_basis",
    "kernel_matrix",
    "BandlimitedFunction",
    "spectrum_weights",
    "analysis",
    "proj_eval",
    "frac_dmu_apply",
    "lp_norm",
    "sobolev_norm",
    "besov_norm_estimate",
]


class NormAccuracyError(RuntimeError):
    """A discretized norm failed its degree-doubling self-check."""


def dim_v(cfg: WeightConfig, n: int) -> int:
    """Dimension of the degree-n orthogonal space: C(n+d-1, d-1)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return math.comb(n + cfg.d - 1, cfg.d - 1)


def dim_pi(d: int, n: int) -> int:
    return math.comb(n + d, d)


def _pair_geometry(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xy = np.sum(x * y, axis=-1)
    sx = np.sqrt(np.clip(1.0 - np.sum(x * x, axis=-1), 0.0, None))
    sy = np.sqrt(np.clip(1.0 - np.sum(y * y, axis=-1), 0.0, None))
    return np.broadcast_arrays(xy, sx * sy)


@functools.lru_cache(maxsize=128)
def _t_rule(mu: float, n_nodes: int):
    gj = gauss_jacobi(n_nodes, mu - 1.0, mu - 1.0)
    return gj.nodes, gj.weights / gj.weights.sum()


def zonal_kernel(cfg: WeightConfig, coeffs, x, y, chunk: int = 20000) -> np.ndarray:
    """sum_k coeffs[k] P_k(w_mu; x, y) by the closed-form integral representation.

    ``x`` and ``y`` broadcast against each other over leading axes.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    K = len(coeffs) - 1
    xy, s = _pair_geometry(x, y)
    shape = xy.shape
    xy, s = xy.ravel(), s.ravel()
    out = np.empty(xy.shape)
    if cfg.mu > 0:
        t, w = _t_rule(cfg.mu, max(1, math.ceil((K + 1) / 2)))
    else:
        t, w = np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    step = max(1, chunk // len(t))
    for i in range(0, len(xy), step):
        u = np.clip(xy[i : i + step, None] + t * s[i : i + step, None], -1.0, 1.0)
        vals = zonal_table(K, cfg.lam, u) @ coeffs
        out[i : i + step] = vals @ w
    return out.reshape(shape)


def kernel_eval(cfg: WeightConfig, n: int, x, y):
    """P_n(w_mu; x, y), the reproducing kernel of the degree-n orthogonal space."""
    if n < 0:
        raise ValueError("n must be >= 0")
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    out = zonal_kernel(cfg, coeffs, x, y)
    return float(out) if np.ndim(out) == 0 else out


def _monomial_exponents(d: int, n: int) -> np.ndarray:
    rows = []
    for total in range(n + 1):
        for combo in itertools.combinations_with_replacement(range(d), total):
            rows.append(np.bincount(np.asarray(combo, dtype=int), minlength=d))
    return np.array(rows, dtype=int).reshape(-1, d)


def gram_schmidt_kernel(cfg: WeightConfig, n: int, x, y) -> np.ndarray:
    """Reference kernel: monomials up to degree n orthonormalized in graded order.

    Independent of the closed form and of the product basis; intended for small n.
    """
    exps = _monomial_exponents(cfg.d, n)
    rule = build_rule(cfg, max(1, 2 * n))

    def mono(p):
        p = np.atleast_2d(np.asarray(p, dtype=float))
        return np.prod(p[:, None, :] ** exps[None, :, :], axis=-1)

    V = mono(rule.nodes)
    G = V.T @ (V * rule.weights[:, None])
    R = np.linalg.cholesky(G).T  # G = R^T R, R upper triangular
    Rinv = np.linalg.inv(R)
    block = np.sum(exps, axis=1) == n
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    xb = np.broadcast_to(x, shape + (cfg.d,)).reshape(-1, cfg.d)
    yb = np.broadcast_to(y, shape + (cfg.d,)).reshape(-1, cfg.d)
    px = (mono(xb) @ Rinv)[:, block]
    py = (mono(yb) @ Rinv)[:, block]
    return np.sum(px * py, axis=1).reshape(shape)


class OrthonormalBasis:
    """Orthonormal basis of Pi_n^d for w_mu, graded by total degree.

    phi_alpha(x) = const * prod_j rho_j^{alpha_j} p_{alpha_j}^{(lam_j)}(x_j / rho_j)
    with rho_j = sqrt(1 - x_1^2 - ... - x_{j-1}^2), lam_j = mu + alpha_{j+1} + ... + alpha_d
    + (d - j)/2 and p^{(lam)} the orthonormal Gegenbauer polynomials of the
    probability weight proportional to (1 - s^2)^(lam - 1/2).
    """

    def __init__(self, cfg: WeightConfig, n: int):
        self.cfg = cfg
        self.n = n
        d = cfg.d
        alphas = []
        for total in range(n + 1):
            alphas.extend(a for a in _compositions(total, d))
        self.alphas = np.array(alphas, dtype=int).reshape(-1, d)
        self.degrees = self.alphas.sum(axis=1)
        tails = np.cumsum(self.alphas[:, ::-1], axis=1)[:, ::-1] - self.alphas  # sum_{i>j} alpha_i
        self._tails = tails
        # column offsets into the concatenated per-(j, tail) tables
        self._offsets = np.array([t * (n + 1) for t in range(n + 1)])
        lam = cfg.mu + tails + (d - 1 - np.arange(d)) / 2.0
        log_norm = math.log(cfg.b_d_mu) + np.sum(log_beta(0.5, lam + 0.5), axis=1)
        self._scale = np.exp(-0.5 * log_norm)

    def __len__(self) -> int:
        return len(self.alphas)

    def __call__(self, X, chunk: int = 2048) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((len(X), len(self)))
        for s in range(0, len(X), chunk):
            out[s : s + chunk] = self._eval(X[s : s + chunk])
        return out

    def _eval(self, X: np.ndarray) -> np.ndarray:
        d, n, mu = self.cfg.d, self.n, self.cfg.mu
        M = len(X)
        sq = np.concatenate([np.zeros((M, 1)), np.cumsum(X * X, axis=1)[:, :-1]], axis=1)
        rho = np.sqrt(np.clip(1.0 - sq, 0.0, None))
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(rho > 0, X / rho, 0.0)
        s = np.clip(s, -1.0, 1.0)
        out = np.tile(self._scale, (M, 1))
        for j in range(d):
            used_tails = np.unique(self._tails[:, j])
            table = np.zeros((M, (n + 1) * (n + 1)))
            rpow = rho[:, j : j + 1] ** np.arange(n + 1)
            for t in used_tails:
                lam = mu + t + (d - 1 - j) / 2.0
                kmax = n - t
                vals = orthonormal_jacobi(kmax, lam - 0.5, lam - 0.5, s[:, j]) * rpow[:, : kmax + 1]
                table[:, t * (n + 1) : t * (n + 1) + kmax + 1] = vals
            out *= table[:, self._tails[:, j] * (n + 1) + self.alphas[:, j]]
        return out


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative ints summing to ``total`` (lexicographic)."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@functools.lru_cache(maxsize=32)
def orthonormal_basis(cfg: WeightConfig, n: int) -> OrthonormalBasis:
    return OrthonormalBasis(cfg, n)


def kernel_matrix(cfg: WeightConfig, X, Y, level_weights) -> np.ndarray:
    """Matrix of sum_k level_weights[k] P_k(x_i, y_j) via the orthonormal basis."""
    level_weights = np.asarray(level_weights, dtype=float)
    basis = orthonormal_basis(cfg, len(level_weights) - 1)
    diag = level_weights[basis.degrees]
    keep = diag != 0
    PX = basis(X)[:, keep]
    PY = basis(Y)[:, keep]
    return (PX * diag[keep]) @ PY.T


@dataclass(frozen=True)
class BandlimitedFunction:
    """An evaluator on (M, d) point arrays known to be a polynomial of degree <= ``degree``."""

    degree: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    label: str = ""
    coeffs: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return float(np.asarray(self.evaluator(X[None, :])).reshape(-1)[0])
        return np.asarray(self.evaluator(X), dtype=float).reshape(len(X))

    @classmethod
    def from_coefficients(cls, cfg: WeightConfig, coeffs, degree: int, label: str = "") -> "BandlimitedFunction":
        """Function sum_alpha coeffs[alpha] phi_alpha in the ``OrthonormalBasis`` of degree ``degree``."""
        coeffs = np.asarray(coeffs, dtype=float)
        basis = orthonormal_basis(cfg, degree)
        if len(coeffs) != len(basis):
            raise ValueError(f"expected {len(basis)} coefficients, got {len(coeffs)}")
        return cls(degree, lambda X: basis(X) @ coeffs, label, coeffs)


def spectrum_weights(cfg: WeightConfig, r: float, kmax: int) -> np.ndarray:
    """(k (k + 2 mu + d - 1))^(r/2) for k = 0..kmax."""
    k = np.arange(kmax + 1, dtype=float)
    return (k * (k + 2.0 * cfg.mu + cfg.d - 1.0)) ** (r / 2.0)


def _require(rule: CubatureRule, degree: int, what: str) -> None:
    if rule.exactness_degree < degree:
        raise ValueError(f"{what} needs a rule exact to degree {degree}, got {rule.exactness_degree}")


def analysis(cfg: WeightConfig, f, rule: CubatureRule, n: int) -> np.ndarray:
    """Discrete Fourier coefficients <f, phi_alpha>_Q for |alpha| <= n.

    These are the exact coefficients when f is a polynomial and the rule is
    exact to degree deg f + n.
    """
    basis = orthonormal_basis(cfg, n)
    vals = np.asarray(f(rule.nodes), dtype=float).reshape(len(rule))
    return basis(rule.nodes).T @ (rule.weights * vals)


def proj_eval(cfg: WeightConfig, f: BandlimitedFunction, k: int, x, rule: CubatureRule):
    """(Proj_k f)(x) as the cubature of y -> f(y) P_k(x, y)."""
    _require(rule, f.degree + k, "proj_eval")
    basis = orthonormal_basis(cfg, k)
    sel = basis.degrees == k
    c = analysis(cfg, f, rule, k)[sel]
    x = np.asarray(x, dtype=float)
    vals = basis(np.atleast_2d(x))[:, sel] @ c
    return float(vals[0]) if x.ndim == 1 else vals


def frac_dmu_apply(cfg: WeightConfig, f: BandlimitedFunction, r: float, rule: CubatureRule) -> BandlimitedFunction:
    """(-D_mu)^(r/2) f = sum_k (k(k+2mu+d-1))^(r/2) Proj_k f for band-limited f."""
    _require(rule, 2 * f.degree, "frac_dmu_apply")
    n = f.degree
    basis = orthonormal_basis(cfg, n)
    c = analysis(cfg, f, rule, n) * spectrum_weights(cfg, r, n)[basis.degrees]
    return BandlimitedFunction.from_coefficients(cfg, c, n, label=f"(-D)^{r / 2:g} {f.label}".strip())


def _lp_once(cfg: WeightConfig, f, p: float, quad_degree: int) -> float:
    rule = build_rule(cfg, quad_degree)
    vals = np.abs(np.asarray(f(rule.nodes), dtype=float).reshape(len(rule)))
    if math.isinf(p):
        grid, _ = hemisphere_grid(cfg.d, max(4, quad_degree))
        gvals = np.abs(np.asarray(f(grid), dtype=float).reshape(len(grid)))
        pts = np.concatenate([rule.nodes, grid])
        allv = np.concatenate([vals, gvals])
        return _polish_max(f, pts[np.argsort(allv)[-_POLISH_STARTS:]], float(allv.max()))
    return float(math.fsum(rule.weights * vals**p) ** (1.0 / p))


_POLISH_STARTS = 2


def _polish_max(f, starts, best: float) -> float:
    """Refine a grid maximum of |f| by Nelder-Mead from the best grid points, staying in the ball."""
    neg = lambda x: -abs(float(np.asarray(f(clamp_to_ball(x)[None, :])).reshape(-1)[0]))
    for x0 in starts:
        res = minimize(neg, x0, method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-12 * max(best, 1e-300)})
        best = max(best, -float(res.fun))
    return best


def lp_norm(cfg: WeightConfig, f, p: float, quad_degree: int, check: bool = True) -> float:
    """||f||_{p,mu}; p = inf takes the max over cubature nodes and a hemisphere grid.

    With ``check`` the computation is repeated at twice the degree and must agree
    to 0.1%, otherwise NormAccuracyError is raised. The finer value is returned.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    coarse = _lp_once(cfg, f, p, quad_degree)
    if not check:
        return coarse
    fine = _lp_once(cfg, f, p, 2 * quad_degree)
    if abs(fine - coarse) > 1e-3 * max(abs(fine), 1e-300) and fine > 1e-300:
        raise NormAccuracyError(
            f"L_{p} norm changed from {coarse:.6g} to {fine:.6g} when doubling degree {quad_degree}"
        )
    return fine


def _norm_degree(f: BandlimitedFunction, p: float) -> int:
    # |f|^2 is a polynomial of degree 2 deg f; other p need headroom
    return max(2, 2 * f.degree) if p == 2 else max(8, 4 * f.degree + 8)


def sobolev_norm(cfg: WeightConfig, f: BandlimitedFunction, r: float, p: float, rule: CubatureRule) -> float:
    """||f||_{p,mu} + ||(-D_mu)^(r/2) f||_{p,mu} for band-limited f."""
    g = frac_dmu_apply(cfg, f, r, rule)
    q = _norm_degree(f, p)
    return lp_norm(cfg, f, p, q) + lp_norm(cfg, g, p, q)


def besov_norm_estimate(cfg: WeightConfig, f: BandlimitedFunction, r: float, tau: float, p: float, filt, rule: CubatureRule) -> float:
    """||f||_p + (sum_{2^j <= deg f} (2^{jr} ||f - V_{2^j} f||_p)^tau)^(1/tau).

    The filtered error ||f - V_L f|| stands in for the best approximation error
    E_L(f); the two agree up to constants, so this is an estimate of the Besov
    norm, not its exact value. ``tau = inf`` gives the sup form.
    """
    from .filtering import v_l_apply

    q = _norm_degree(f, p)
    base = lp_norm(cfg, f, p, q)
    terms = []
    j = 0
    while 2**j <= max(f.degree, 1):
        L = 2**j
        if L >= f.degree:
            # V_L reproduces Pi_L, so the remaining terms vanish
            terms.append(0.0)
            break
        vf = v_l_apply(cfg, f, L, filt, rule)
        diff = lambda X, vf=vf: f(X) - vf(X)
        e = lp_norm(cfg, diff, p, max(q, _norm_degree(vf, p)), check=p == 2)
        terms.append(2.0 ** (j * r) * e)
        j += 1
    terms = np.array(terms)
    if math.isinf(tau):
        return base + float(terms.max(initial=0.0))
    return base + float(np.sum(terms**tau) ** (1.0 / tau))
