"""Fooling functions: disjointly supported smooth bumps hidden from a node set.

Bumps phi_j(x) = phi(m (x - x_j)) sit on a lattice of spacing 4/m inside
B(0, 2/3). The profile is phi(u) = s(2|u|) with s the filter transition, so
phi = 1 on |u| <= 1/2, phi = 0 on |u| >= 1 and phi is C-infinity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cubature import sphere_rule
from .filtering import smooth_step
from .orthopoly import WeightConfig, gauss_jacobi

__all__ = [
    "FiniteDifferenceError",
    "bump_profile",
    "BumpSystem",
    "build_bump_system",
    "FoolingFunction",
    "dmu_fd",
    "dmu_richardson",
    "bump_integrals",
    "certify_norm",
    "fool_rule",
]

CENTER_RADIUS = 2.0 / 3.0


class FiniteDifferenceError(RuntimeError):
    pass


def bump_profile(u) -> np.ndarray:
    """phi(u) for points u of shape (..., d)."""
    u = np.asarray(u, dtype=float)
    return smooth_step(2.0 * np.linalg.norm(u, axis=-1))


def _lattice(d: int, m: int) -> np.ndarray:
    """Lattice points of spacing 4/m in the closed ball of radius 2/3, sorted by norm then lexicographically."""
    h = 4.0 / m
    k = int(math.floor(CENTER_RADIUS / h + 1e-12))
    pts = np.array(list(itertools.product(range(-k, k + 1), repeat=d)), dtype=float) * h
    pts = pts[np.linalg.norm(pts, axis=1) <= CENTER_RADIUS + 1e-12]
    order = np.lexsort(tuple(pts[:, i] for i in reversed(range(d))) + (np.round(np.linalg.norm(pts, axis=1), 12),))
    return pts[order]


@dataclass(frozen=True)
class BumpSystem:
    cfg: WeightConfig
    n: int
    m: int
    centers: np.ndarray  # (K, d), K >= 4n
    tree: cKDTree = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.tree is None:
            object.__setattr__(self, "tree", cKDTree(self.centers))

    def __len__(self) -> int:
        return len(self.centers)

    def bump(self, j: int, X) -> np.ndarray:
        return bump_profile(self.m * (np.asarray(X, dtype=float) - self.centers[j]))

    def certify(self) -> None:
        """Check the support and disjointness invariants; raise AssertionError otherwise."""
        c = self.centers
        if len(c) > 1:
            dist, _ = self.tree.query(c, k=2)
            if dist[:, 1].min() < 4.0 / self.m - 1e-12:
                raise AssertionError("balls B(x_j, 2/m) overlap")
        if np.linalg.norm(c, axis=1).max() + 1.0 / self.m > 5.0 / 6.0 + 1e-12:
            raise AssertionError("a support leaves B(0, 5/6)")
        if not np.allclose(bump_profile(np.zeros((1, self.cfg.d))), 1.0):
            raise AssertionError("phi(0) != 1")


def build_bump_system(cfg: WeightConfig, n: int, m: int | None = None) -> BumpSystem:
    """4n bumps on the lattice of the smallest scale m >= 6 hosting them.

    With an explicit ``m`` the lattice at that scale is used (n = 0 keeps every
    lattice point).
    """
    if n < 0 or (n == 0 and m is None):
        raise ValueError("n must be >= 1")
    if m is None:
        m = 6
        while len(_lattice(cfg.d, m)) < 4 * n:
            m += 1
    if m < 6:
        raise ValueError("scale m must be >= 6")
    pts = _lattice(cfg.d, m)
    if len(pts) < 4 * n:
        raise ValueError(f"scale m={m} hosts only {len(pts)} < {4 * n} centers")
    system = BumpSystem(cfg, n, m, pts[: 4 * n] if n else pts)
    system.certify()
    return system


@dataclass(frozen=True)
class FoolingFunction:
    system: BumpSystem
    signs: np.ndarray  # one of -1, 0, 1 per center
    normalization: float = 1.0

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        _, idx = self.system.tree.query(X)
        u = self.system.m * (X - self.system.centers[idx])
        out = self.normalization * self.signs[idx] * bump_profile(u)
        return float(out[0]) if single else out

    def scaled(self, c: float) -> "FoolingFunction":
        return FoolingFunction(self.system, self.signs, self.normalization * c)


# local polar rules around a center: Gauss-Legendre in the radius on [0, 1/2] and [1/2, 1]
_RADIAL_NODES = 48
_SPHERE_DEGREE = 48


def _local_rule(d: int, m: int, refine: int = 1):
    gl = gauss_jacobi(_RADIAL_NODES * refine, 0.0, 0.0)
    t, w = [], []
    for a, b in ((0.0, 0.5), (0.5, 1.0)):
        t.append(a + (b - a) * (gl.nodes + 1.0) / 2.0)
        w.append((b - a) / 2.0 * gl.weights)
    t, w = np.concatenate(t), np.concatenate(w)
    xi, v = sphere_rule(d, _SPHERE_DEGREE * refine)
    area = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    u = (t[:, None, None] * xi[None, :, :]).reshape(-1, d)
    wu = np.outer(w * t ** (d - 1), v * area).ravel()
    # offsets x - x_j = u / m and volume element m^-d
    return u / m, wu / m**d


def dmu_fd(cfg: WeightConfig, F, X, h: float) -> np.ndarray:
    """Second-order central differences of D_mu F = Lap F - sum x_i x_j d_ij F - (2 mu + d) x . grad F."""
    X = np.asarray(X, dtype=float)
    d = cfg.d
    f0 = F(X)
    E = np.eye(d) * h
    fp = [F(X + E[i]) for i in range(d)]
    fm = [F(X - E[i]) for i in range(d)]
    out = np.zeros(len(X))
    for i in range(d):
        dii = (fp[i] - 2.0 * f0 + fm[i]) / h**2
        di = (fp[i] - fm[i]) / (2.0 * h)
        out += dii * (1.0 - X[:, i] ** 2) - (2.0 * cfg.mu + d) * X[:, i] * di
    for i in range(d):
        for j in range(i + 1, d):
            dij = (F(X + E[i] + E[j]) - F(X + E[i] - E[j]) - F(X - E[i] + E[j]) + F(X - E[i] - E[j])) / (4.0 * h**2)
            out -= 2.0 * X[:, i] * X[:, j] * dij
    return out


def _dmu_power(cfg: WeightConfig, F, X, h: float, v: int) -> np.ndarray:
    if v == 0:
        return F(X)
    inner = lambda Y: _dmu_power(cfg, F, Y, h, v - 1)
    return dmu_fd(cfg, inner, X, h)


def dmu_richardson(cfg: WeightConfig, F, X, h: float, v: int = 1, rtol: float = 1e-3) -> np.ndarray:
    """(-D_mu)^v F by Richardson-extrapolated differences, with a self-check.

    Two extrapolants (steps h, h/2 and h/2, h/4) must agree to ``rtol`` relative
    to their sup, otherwise FiniteDifferenceError is raised.
    """
    a, b, c = (_dmu_power(cfg, F, X, s, v) for s in (h, h / 2.0, h / 4.0))
    r1, r2 = (4.0 * b - a) / 3.0, (4.0 * c - b) / 3.0
    scale = max(np.max(np.abs(r2)), 1e-300)
    if np.max(np.abs(r1 - r2)) > rtol * scale:
        raise FiniteDifferenceError(
            f"difference step {h:.3g} unresolved: extrapolants differ by {np.max(np.abs(r1 - r2)) / scale:.2e}"
        )
    return (-1) ** v * r2


def bump_integrals(system: BumpSystem, power: float = 1.0, refine: int = 1) -> np.ndarray:
    """int phi_j(x)^power w_mu(x) dx for every center."""
    offs, wu = _local_rule(system.cfg.d, system.m, refine)
    prof = bump_profile(offs * system.m) ** power
    out = np.empty(len(system))
    for j, c in enumerate(system.centers):
        out[j] = math.fsum(wu * prof * system.cfg.weight(c + offs))
    return out


def _local_norms(system: BumpSystem, v: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Per bump: (||phi_j||_p, ||(-D_mu)^v phi_j||_p), both in L_{p,mu}."""
    cfg, m = system.cfg, system.m
    # step in units of the bump radius; nested differences for v >= 2 need a finer one
    h = (0.01 if v <= 1 else 0.002) / m
    offs, wu = _local_rule(cfg.d, m)
    if math.isinf(p):
        # dense probes in the transition annulus, where D_mu phi_j lives
        rad = np.linspace(0.45, 1.0, 24)
        xi, _ = sphere_rule(cfg.d, 47)
        probes = (rad[:, None, None] * xi[None]).reshape(-1, cfg.d) / m
    pts = probes if math.isinf(p) else offs
    base, top = np.empty(len(system)), np.empty(len(system))
    chunk = max(1, 200000 // len(pts))
    for s in range(0, len(system), chunk):
        C = system.centers[s : s + chunk]
        X = (C[:, None, :] + pts[None]).reshape(-1, cfg.d)
        anchor = np.repeat(C, len(pts), axis=0)
        F = lambda Y: bump_profile(m * (Y - anchor))  # shifts keep each row paired with its center
        g = (dmu_richardson(cfg, F, X, h, v) if v else F(X)).reshape(len(C), -1)
        if math.isinf(p):
            base[s : s + chunk] = 1.0
            top[s : s + chunk] = np.max(np.abs(g), axis=1)
        else:
            w = wu * cfg.weight(X).reshape(len(C), -1)
            prof = F(X).reshape(len(C), -1)
            base[s : s + chunk] = [math.fsum(row) ** (1.0 / p) for row in w * prof**p]
            top[s : s + chunk] = [math.fsum(row) ** (1.0 / p) for row in w * np.abs(g) ** p]
    return base, top


def _combine(alpha: np.ndarray, per_bump: np.ndarray, p: float) -> float:
    a = np.abs(alpha)
    if math.isinf(p):
        return float(np.max(a * per_bump)) if len(a) else 0.0
    return float(math.fsum((a * per_bump) ** p) ** (1.0 / p))


def certify_norm(cfg: WeightConfig, f: FoolingFunction, r: float, p: float) -> float:
    """Sobolev-norm surrogate ||f||_{p,mu} + ||(-D_mu)^{r/2} f||_{p,mu}.

    For even r the power is applied directly. Otherwise v = ceil(r/2) and the
    fractional term is the interpolation bound ||f||^{1 - r/(2v)} ||(-D_mu)^v f||^{r/(2v)}.
    Supports are disjoint and D_mu is local, so the norms combine bump by bump.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if p < 1:
        raise ValueError("p must be >= 1")
    alpha = np.asarray(f.signs, dtype=float)
    if not np.any(alpha):
        return 0.0
    v = math.ceil(r / 2.0 - 1e-12)
    live = alpha != 0
    sub = BumpSystem(cfg, f.system.n, f.system.m, f.system.centers[live])
    base, top = _local_norms(sub, v, p)
    s = abs(f.normalization)
    low = s * _combine(alpha[live], base, p)
    high = s * _combine(alpha[live], top, p)
    theta = r / (2.0 * v)
    return low + (high if theta == 1.0 else low ** (1.0 - theta) * high**theta)


def fool_rule(cfg: WeightConfig, rule_nodes, n: int, r: float, p: float) -> tuple[FoolingFunction, float]:
    """A unit-norm bump sum vanishing at every rule node, and its (positive) integral.

    Any rule using these nodes returns 0 on the function, so its worst-case error
    on the unit ball of the smoothness class is at least the returned witness.
    """
    nodes = np.atleast_2d(np.asarray(rule_nodes, dtype=float))
    if len(nodes) > n:
        raise ValueError(f"{len(nodes)} nodes exceed n = {n}")
    system = build_bump_system(cfg, n)
    # a node at distance < 1/m from x_j lies in the open support of phi_j
    hit = np.zeros(len(system), dtype=bool)
    if len(nodes):
        for lst in system.tree.query_ball_point(nodes, 1.0 / system.m):
            hit[list(lst)] = True
    signs = np.where(hit, 0, 1).astype(int)
    raw = FoolingFunction(system, signs, 1.0)
    f = raw.scaled(1.0 / certify_norm(cfg, raw, r, p))
    witness = f.normalization * math.fsum(bump_integrals(system)[signs == 1])
    return f, witness
