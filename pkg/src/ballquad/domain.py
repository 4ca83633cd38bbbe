"""Geometry and sampling on the unit ball.

Points are numpy arrays of shape ``(d,)`` or ``(M, d)``. The metric rho is the
geodesic distance after lifting x to (x, sqrt(1 - |x|^2)) on the upper
hemisphere of S^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .orthopoly import WeightConfig

__all__ = [
    "clamp_to_ball",
    "lift",
    "rho",
    "SeededStream",
    "sample_mu",
    "SeparatedSet",
    "hemisphere_grid",
    "separated_set",
]

_MASK64 = (1 << 64) - 1


def clamp_to_ball(x) -> np.ndarray:
    """Radially project points with |x| > 1 back onto the unit sphere."""
    x = np.array(x, dtype=float)
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    return np.where(norm > 1.0, x / np.where(norm > 0, norm, 1.0), x)


def lift(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = np.sqrt(np.clip(1.0 - np.sum(x * x, axis=-1, keepdims=True), 0.0, None))
    return np.concatenate([x, h], axis=-1)


def rho(x, y) -> np.ndarray | float:
    """arccos(x.y + sqrt(1-|x|^2) sqrt(1-|y|^2)), broadcasting over leading axes.

    Evaluated as the angle 2 atan2(|u - v|, |u + v|) between the lifted unit
    vectors u, v, which stays accurate for nearby points where arccos does not.
    """
    u, v = lift(x), lift(y)
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    out = 2.0 * np.arctan2(np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SeededStream:
    """Key of an independent random stream.

    The generator is Philox (counter-based) keyed by (master_seed, stream_index),
    so a stream's variates do not depend on which other streams were used or in
    which order.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        key = [self.master_seed & _MASK64, self.stream_index & _MASK64]
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "SeededStream":
        return SeededStream(self.master_seed, index)


def _as_generator(stream) -> np.random.Generator:
    if isinstance(stream, SeededStream):
        return stream.generator()
    if isinstance(stream, np.random.Generator):
        return stream
    raise TypeError(f"expected SeededStream or numpy Generator, got {type(stream).__name__}")


def sample_mu(cfg: WeightConfig, stream, size: int | None = None) -> np.ndarray:
    """Exact draws from w_mu(x) dx.

    x = sqrt(u) * xi with xi uniform on S^{d-1} and u ~ Beta(d/2, mu + 1/2),
    the Beta variate being a ratio of two Gamma variates. A ``SeededStream``
    starts from counter zero on every call; pass a Generator to continue a
    sequence.
    """
    rng = _as_generator(stream)
    n = 1 if size is None else int(size)
    g = rng.standard_normal((n, cfg.d))
    xi = g / np.linalg.norm(g, axis=1, keepdims=True)
    ga = rng.standard_gamma(cfg.d / 2.0, size=n)
    gb = rng.standard_gamma(cfg.mu + 0.5, size=n)
    x = np.sqrt(ga / (ga + gb))[:, None] * xi
    return x[0] if size is None else x


@dataclass(frozen=True)
class SeparatedSet:
    epsilon: float
    points: np.ndarray
    grid_spacing: float
    covering_radius: float  # max rho from a grid point to the set; < epsilon

    def __len__(self) -> int:
        return len(self.points)


def _sphere_grid(d: int, spacing: float) -> np.ndarray:
    """Points on S^{d-1} with geodesic spacing about ``spacing``."""
    if d == 1:
        return np.array([[-1.0], [1.0]])
    if d == 2:
        m = max(1, math.ceil(2.0 * math.pi / spacing))
        t = 2.0 * math.pi * (np.arange(m) + 0.5) / m
        return np.column_stack([np.cos(t), np.sin(t)])
    n_phi = max(1, math.ceil(math.pi / spacing))
    pts = []
    for phi in math.pi * (np.arange(n_phi) + 0.5) / n_phi:
        sub = _sphere_grid(d - 1, spacing / math.sin(phi))
        pts.append(np.column_stack([math.sin(phi) * sub, np.full(len(sub), math.cos(phi))]))
    return np.concatenate(pts)


def hemisphere_grid(d: int, resolution: int) -> tuple[np.ndarray, float]:
    """Deterministic grid on B^d that is roughly uniform in rho.

    Rings at polar angles theta_i = i * h, h = (pi/2) / resolution, |x| = sin(theta_i).
    Returns the points and the spacing h.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    h = 0.5 * math.pi / resolution
    pts = [np.zeros((1, d))]
    for i in range(1, resolution + 1):
        theta = i * h
        ring = _sphere_grid(d, h / math.sin(theta))
        pts.append(math.sin(theta) * ring)
    return np.concatenate(pts), h


def separated_set(cfg: WeightConfig, epsilon: float, probe_resolution: int) -> SeparatedSet:
    """Greedy farthest-point epsilon-separated set over a hemisphere grid.

    Starting from the origin, the grid point farthest (in rho) from the current
    set is added until every grid point is within epsilon. Members are pairwise
    at least epsilon apart and the grid is covered at radius epsilon.
    """
    if not 0.0 < epsilon <= math.pi:
        raise ValueError("epsilon must lie in (0, pi]")
    cand, h = hemisphere_grid(cfg.d, probe_resolution)
    if h > epsilon / 2.0:
        raise ValueError(
            f"probe_resolution={probe_resolution} (spacing {h:.3g}) too coarse to certify covering at epsilon={epsilon}"
        )
    lifted = lift(cand)
    chosen = [0]
    dist = np.arccos(np.clip(lifted @ lifted[0], -1.0, 1.0))
    while True:
        i = int(np.argmax(dist))
        if dist[i] < epsilon:
            break
        chosen.append(i)
        dist = np.minimum(dist, np.arccos(np.clip(lifted @ lifted[i], -1.0, 1.0)))
    pts = cand[chosen]
    return SeparatedSet(float(epsilon), pts, h, float(dist.max()))
