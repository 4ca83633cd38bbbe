"""One-dimensional orthogonal polynomials: Jacobi recurrences, Gauss-Jacobi
rules, Gegenbauer evaluation and the normalization constant of the ball weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

__all__ = [
    "GaussJacobiRule",
    "WeightConfig",
    "jacobi_recurrence",
    "jacobi_mass",
    "orthonormal_jacobi",
    "gauss_jacobi",
    "gegenbauer_eval",
    "gegenbauer_table",
    "zonal_table",
    "log_beta",
    "normalization_b",
]


def log_beta(a, b):
    return gammaln(a) + gammaln(b) - gammaln(np.add(a, b))


def jacobi_mass(alpha: float, beta: float) -> float:
    """Total mass of (1-t)^alpha (1+t)^beta on [-1, 1]."""
    return math.exp((alpha + beta + 1.0) * math.log(2.0) + log_beta(alpha + 1.0, beta + 1.0))


def _check_exponents(alpha: float, beta: float) -> None:
    if alpha <= -1.0 or beta <= -1.0:
        raise ValueError(f"Jacobi exponents must exceed -1, got alpha={alpha}, beta={beta}")


def jacobi_recurrence(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Monic recurrence coefficients for the weight (1-t)^alpha (1+t)^beta.

    Returns ``(a, b)`` of length ``n`` with ``p_{k+1} = (t - a_k) p_k - b_k p_{k-1}``;
    ``b[0]`` is unused and set to zero.
    """
    _check_exponents(alpha, beta)
    k = np.arange(n, dtype=float)
    ab = alpha + beta
    s = 2.0 * k + ab
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (beta**2 - alpha**2) / (s * (s + 2.0))
        b = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s**2 * (s + 1.0) * (s - 1.0))
    if n > 0:
        a[0] = (beta - alpha) / (ab + 2.0)
        b[0] = 0.0
    if n > 1:
        # the generic formula is 0/0 at k=1 when alpha+beta = -1
        b[1] = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) ** 2 * (3.0 + ab))
    return a, b


def orthonormal_jacobi(nmax: int, alpha: float, beta: float, t) -> np.ndarray:
    """Values of the orthonormal Jacobi polynomials of degree 0..nmax.

    Orthonormality is with respect to the *probability* measure proportional to
    (1-t)^alpha (1+t)^beta. The result has shape ``t.shape + (nmax + 1,)``.
    """
    t = np.asarray(t, dtype=float)
    a, b = jacobi_recurrence(nmax + 1, alpha, beta)
    sb = np.sqrt(b)
    out = np.empty(t.shape + (nmax + 1,))
    out[..., 0] = 1.0
    if nmax >= 1:
        out[..., 1] = (t - a[0]) / sb[1]
    for k in range(1, nmax):
        out[..., k + 1] = ((t - a[k]) * out[..., k] - sb[k] * out[..., k - 1]) / sb[k + 1]
    return out


@dataclass(frozen=True)
class GaussJacobiRule:
    alpha: float
    beta: float
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def gauss_jacobi(n_nodes: int, alpha: float, beta: float) -> GaussJacobiRule:
    """Gauss rule for (1-t)^alpha (1+t)^beta dt with ``n_nodes`` points.

    Nodes are eigenvalues of the symmetric Jacobi matrix. Weights are taken
    from the Christoffel function ``mass / sum_k p_k(t_i)^2``, which keeps small
    weights accurate in the relative sense (eigenvector components do not).
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    _check_exponents(alpha, beta)
    a, b = jacobi_recurrence(n_nodes, alpha, beta)
    if n_nodes == 1:
        nodes = a[:1].copy()
    else:
        nodes = eigh_tridiagonal(a, np.sqrt(b[1:]), eigvals_only=True)
    nodes = np.sort(nodes)
    p = orthonormal_jacobi(n_nodes - 1, alpha, beta, nodes)
    weights = jacobi_mass(alpha, beta) / np.sum(p * p, axis=-1)
    return GaussJacobiRule(alpha, beta, nodes, weights)


def gegenbauer_table(nmax: int, lam: float, t) -> np.ndarray:
    """C_k^lam(t) for k = 0..nmax via the forward three-term recurrence."""
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape + (nmax + 1,))
    out[..., 0] = 1.0
    if nmax >= 1:
        out[..., 1] = 2.0 * lam * t
    for k in range(2, nmax + 1):
        out[..., k] = (2.0 * (k + lam - 1.0) * t * out[..., k - 1] - (k + 2.0 * lam - 2.0) * out[..., k - 2]) / k
    return out


def gegenbauer_eval(n: int, lam: float, t):
    """C_n^lam(t)."""
    vals = gegenbauer_table(n, lam, t)[..., n]
    return float(vals) if np.ndim(vals) == 0 else vals


def zonal_table(nmax: int, lam: float, t) -> np.ndarray:
    """Z_k(t) = (k + lam)/lam * C_k^lam(t), k = 0..nmax, with the lam -> 0 limit 2 T_k.

    These are the zonal factors of the reproducing kernels: Z_k(1) grows like the
    dimension of the k-th eigenspace.
    """
    t = np.asarray(t, dtype=float)
    if lam > 0:
        k = np.arange(nmax + 1)
        return gegenbauer_table(nmax, lam, t) * ((k + lam) / lam)
    out = np.empty(t.shape + (nmax + 1,))
    out[..., 0] = 1.0
    if nmax >= 1:
        out[..., 1] = 2.0 * t
    if nmax >= 2:
        prev, cur = np.ones_like(t), t.copy()
        for k in range(2, nmax + 1):
            prev, cur = cur, 2.0 * t * cur - prev
            out[..., k] = 2.0 * cur
    return out


@dataclass(frozen=True)
class WeightConfig:
    """The probability measure w_mu(x) dx = b (1 - |x|^2)^(mu - 1/2) dx on B^d."""

    d: int
    mu: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")

    @property
    def b_d_mu(self) -> float:
        return normalization_b(self.d, self.mu)

    @property
    def lam(self) -> float:
        """Gegenbauer index mu + (d-1)/2 of the zonal kernels."""
        return self.mu + (self.d - 1) / 2.0

    def weight(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = np.clip(1.0 - np.sum(x * x, axis=-1), 0.0, None)
        with np.errstate(divide="ignore"):
            return self.b_d_mu * s ** (self.mu - 0.5)


def normalization_b(d: int, mu: float) -> float:
    """Reciprocal of the ball integral of (1 - |x|^2)^(mu - 1/2).

    Radial reduction: sphere area 2 pi^(d/2) / Gamma(d/2) times B(d/2, mu + 1/2) / 2.
    """
    log_area = math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d)
    log_int = log_area - math.log(2.0) + log_beta(0.5 * d, mu + 0.5)
    return math.exp(-log_int)
