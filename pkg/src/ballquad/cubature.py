"""Positive product cubature on the ball for the measure w_mu(x) dx.

Nodes are x = r * xi with a Gauss-Jacobi rule in s = 2 r^2 - 1 and a product
rule on the sphere (Gauss-Gegenbauer in the polar coordinates, equal weights in
the azimuth). All weights are positive and sum to one.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .orthopoly import WeightConfig, gauss_jacobi

__all__ = [
    "CertificationError",
    "CubatureRule",
    "sphere_rule",
    "build_rule",
    "rule_size",
    "largest_degree",
    "largest_level",
    "integrate",
    "discrete_inner",
    "ball_moment",
    "certify_rule",
    "save_rule",
    "load_rule",
    "RULE_FORMAT_VERSION",
]

RULE_FORMAT_VERSION = 1

# beyond this many monomial-node products the certificate uses a sampled family
_FULL_CERT_BUDGET = 2e10


class CertificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CubatureRule:
    cfg: WeightConfig
    nodes: np.ndarray  # (M, d)
    weights: np.ndarray  # (M,)
    exactness_degree: int
    certificate: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, f) -> float:
        return integrate(self, f)


def sphere_rule(d: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Positive rule on S^{d-1} (normalized surface measure) exact to ``degree``."""
    if d == 1:
        return np.array([[-1.0], [1.0]]), np.array([0.5, 0.5])
    if d == 2:
        m = degree + 1
        theta = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(theta), np.sin(theta)]), np.full(m, 1.0 / m)
    # last coordinate t has density (1 - t^2)^((d-3)/2) on S^{d-1}
    a = (d - 3) / 2.0
    gj = gauss_jacobi(max(1, math.ceil((degree + 1) / 2)), a, a)
    sub_pts, sub_w = sphere_rule(d - 1, degree)
    t = gj.nodes[:, None]
    pts = np.concatenate(
        [
            (np.sqrt(1.0 - t**2)[:, :, None] * sub_pts[None, :, :]).reshape(-1, d - 1),
            np.repeat(gj.nodes, len(sub_w))[:, None],
        ],
        axis=1,
    )
    w = np.outer(gj.weights, sub_w).ravel()
    return pts, w / w.sum()


def _radial_count(degree: int) -> int:
    # even monomials of degree 2k reduce to polynomials of degree k in s
    return max(1, math.ceil((degree // 2 + 1) / 2))


def rule_size(d: int, degree: int) -> int:
    """Node count of ``build_rule`` without building it."""
    if d == 1:
        return max(1, math.ceil((degree + 1) / 2))
    count = degree + 1
    for _ in range(3, d + 1):
        count *= max(1, math.ceil((degree + 1) / 2))
    return _radial_count(degree) * count


def largest_degree(d: int, max_nodes: float) -> int:
    """Largest exactness degree whose rule has at most ``max_nodes`` nodes (0 if none)."""
    D = 0
    while rule_size(d, D + 1) <= max_nodes:
        D += 1
    return D


def largest_level(d: int, max_nodes: float, factor: int = 3) -> int:
    """Largest L whose rule of degree factor*L has at most ``max_nodes`` nodes (0 if none)."""
    L = 0
    while rule_size(d, factor * (L + 1)) <= max_nodes:
        L += 1
    return L


def _raw_rule(cfg: WeightConfig, degree: int) -> tuple[np.ndarray, np.ndarray]:
    d, mu = cfg.d, cfg.mu
    if d == 1:
        gj = gauss_jacobi(rule_size(1, degree), mu - 0.5, mu - 0.5)
        return gj.nodes[:, None], gj.weights / gj.weights.sum()
    gj = gauss_jacobi(_radial_count(degree), mu - 0.5, d / 2.0 - 1.0)
    r = np.sqrt((1.0 + gj.nodes) / 2.0)
    xi, v = sphere_rule(d, degree)
    nodes = (r[:, None, None] * xi[None, :, :]).reshape(-1, d)
    weights = np.outer(gj.weights / gj.weights.sum(), v).ravel()
    return nodes, weights / weights.sum()


def ball_moment(cfg: WeightConfig, gamma) -> float:
    """Integral of x^gamma against w_mu (zero if any exponent is odd)."""
    gamma = np.asarray(gamma)
    if np.any(gamma % 2):
        return 0.0
    g = gamma.sum()
    d, mu = cfg.d, cfg.mu
    log_m = (
        np.sum(gammaln((gamma + 1) / 2.0))
        - d * gammaln(0.5)
        + gammaln(d / 2.0 + mu + 0.5)
        - gammaln(g / 2.0 + d / 2.0 + mu + 0.5)
    )
    return float(np.exp(log_m))


def _monomials(d: int, degree: int):
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(d), total):
            yield np.bincount(np.asarray(combo, dtype=int), minlength=d)


def _certifying_family(d: int, degree: int, n_nodes: int, rng_seed: int = 0) -> np.ndarray:
    n_mono = math.comb(degree + d, d)
    if d <= 3 and n_mono * n_nodes <= _FULL_CERT_BUDGET:
        return np.array(list(_monomials(d, degree)), dtype=int)
    low = [g for g in _monomials(d, min(4, degree))]
    rng = np.random.default_rng(rng_seed)
    sampled = []
    while len(sampled) < 500:
        total = rng.integers(0, degree + 1)
        cuts = np.sort(rng.integers(0, total + 1, size=d - 1))
        sampled.append(np.diff(np.concatenate([[0], cuts, [total]])))
    return np.array(low + sampled, dtype=int)


def _monomial_sums(nodes: np.ndarray, weights: np.ndarray, family: np.ndarray) -> np.ndarray:
    deg = int(family.max()) if family.size else 0
    d = nodes.shape[1]
    powers = nodes[:, :, None] ** np.arange(deg + 1)  # (M, d, deg+1)
    if d <= 3:
        # full moment tensor by BLAS contractions, then pick the family entries
        if d == 1:
            tensor = weights @ powers[:, 0, :]
        elif d == 2:
            tensor = (powers[:, 0, :] * weights[:, None]).T @ powers[:, 1, :]
        else:
            tensor = np.empty((deg + 1,) * 3)
            for c in range(deg + 1):
                wz = weights * powers[:, 2, c]
                tensor[:, :, c] = (powers[:, 0, :] * wz[:, None]).T @ powers[:, 1, :]
        return tensor[tuple(family.T)]
    out = np.empty(len(family))
    chunk = max(1, int(2e7 // max(1, len(weights))))
    for s in range(0, len(family), chunk):
        fam = family[s : s + chunk]
        vals = np.ones((len(weights), len(fam)))
        for j in range(d):
            vals *= powers[:, j, fam[:, j]]
        out[s : s + chunk] = weights @ vals
    return out


def certify_rule(cfg: WeightConfig, nodes, weights, degree: int, rel_tol: float = 1e-10, abs_tol: float = 1e-12) -> dict:
    """Check a rule against closed-form moments; raise CertificationError on failure."""
    family = _certifying_family(cfg.d, degree, len(weights))
    got = _monomial_sums(nodes, weights, family)
    exact = np.array([ball_moment(cfg, g) for g in family])
    odd = np.any(family % 2 == 1, axis=1)
    err = np.where(odd, np.abs(got), np.abs(got - exact) / np.where(odd, 1.0, np.abs(exact)))
    tol = np.where(odd, abs_tol, rel_tol)
    worst = int(np.argmax(err / tol))
    cert = {
        "degree": degree,
        "n_monomials": len(family),
        "max_rel_err_even": float(err[~odd].max()) if np.any(~odd) else 0.0,
        "max_abs_err_odd": float(err[odd].max()) if np.any(odd) else 0.0,
        "worst_monomial": family[worst].tolist(),
    }
    if np.any(weights <= 0):
        raise CertificationError(f"non-positive weight in rule of degree {degree}")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise CertificationError(f"weights sum to {weights.sum()!r}")
    if err[worst] > tol[worst]:
        raise CertificationError(
            f"degree-{degree} rule fails on monomial {cert['worst_monomial']}: error {err[worst]:.3e}"
        )
    return cert


@functools.lru_cache(maxsize=64)
def build_rule(cfg: WeightConfig, target_degree: int) -> CubatureRule:
    """Positive rule for w_mu exact on polynomials of degree <= target_degree.

    Rules are cached per (cfg, degree); node and weight arrays are read-only.
    """
    if target_degree < 1:
        raise ValueError("target_degree must be >= 1")
    nodes, weights = _raw_rule(cfg, target_degree)
    cert = certify_rule(cfg, nodes, weights, target_degree)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return CubatureRule(cfg, nodes, weights, target_degree, cert)


def _as_values(f, nodes) -> np.ndarray:
    return np.asarray(f(nodes), dtype=float).reshape(len(nodes))


def integrate(rule: CubatureRule, f) -> float:
    """Q(f) = sum of lambda_w f(w); ``f`` maps an (M, d) array to M values."""
    vals = _as_values(f, rule.nodes)
    return float(math.fsum(rule.weights * vals))


def discrete_inner(rule: CubatureRule, f, g) -> float:
    vals = _as_values(f, rule.nodes) * _as_values(g, rule.nodes)
    return float(math.fsum(rule.weights * vals))


def save_rule(rule: CubatureRule, path) -> None:
    """Versioned flat file: a header line then one row (coords..., weight) per node."""
    path = Path(path)
    d = rule.cfg.d
    lines = [
        f"# ballquad-rule v{RULE_FORMAT_VERSION} d={d} mu={rule.cfg.mu!r} "
        f"exactness={rule.exactness_degree} nodes={len(rule)}"
    ]
    for x, w in zip(rule.nodes, rule.weights):
        lines.append(" ".join(f"{v:.17g}" for v in (*x, w)))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write rule to {path}: {exc}") from exc


def load_rule(path, recertify: bool = True) -> CubatureRule:
    path = Path(path)
    text = path.read_text().splitlines()
    header = dict(tok.split("=", 1) for tok in text[0].split()[3:])
    version = text[0].split()[2]
    if version != f"v{RULE_FORMAT_VERSION}":
        raise ValueError(f"{path}: unsupported rule format {version}")
    cfg = WeightConfig(int(header["d"]), float(header["mu"]))
    data = np.loadtxt(text[1:], ndmin=2)
    if len(data) != int(header["nodes"]):
        raise ValueError(f"{path}: expected {header['nodes']} nodes, found {len(data)}")
    nodes, weights = data[:, : cfg.d], data[:, cfg.d]
    degree = int(header["exactness"])
    cert = certify_rule(cfg, nodes, weights, degree) if recertify else {}
    return CubatureRule(cfg, nodes, weights, degree, cert)
