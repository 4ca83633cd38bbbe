import itertools

import mpmath
import numpy as np
import pytest

from ballquad.orthopoly import WeightConfig
from ballquad.spectral import BandlimitedFunction, dim_pi

MUS = (0.0, 0.5, 1.5)
CONFIGS = [WeightConfig(d, mu) for d in (1, 2) for mu in MUS]


def random_poly(cfg, degree, rng):
    """Random element of Pi_degree with standard normal coefficients in the orthonormal basis."""
    c = rng.standard_normal(dim_pi(cfg.d, degree))
    return BandlimitedFunction.from_coefficients(cfg, c, degree, label=f"P{degree}")


def random_points(cfg, count, rng, radius=1.0):
    g = rng.standard_normal((count, cfg.d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * radius * rng.uniform(size=(count, 1)) ** (1.0 / cfg.d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(config, items):
    for item in items:
        if "acceptance" in item.nodeid:
            item.add_marker(pytest.mark.slow)


def moment_oracle(cfg, gamma):
    """Polar reduction: E r^{|g|} times the sphere moment, each a Beta ratio, at 40 digits."""
    if any(g % 2 for g in gamma):
        return 0.0
    d, mu = cfg.d, mpmath.mpf(cfg.mu)
    g = sum(gamma)
    with mpmath.workdps(40):
        # r^2 ~ Beta(d/2, mu + 1/2)
        radial = mpmath.beta(d / mpmath.mpf(2) + g / 2, mu + 0.5) / mpmath.beta(d / mpmath.mpf(2), mu + 0.5)
        # uniform sphere: prod Gamma((g_i+1)/2) / Gamma(1/2)^d * Gamma(d/2) / Gamma((g+d)/2)
        sph = mpmath.fprod(mpmath.gamma((k + 1) / mpmath.mpf(2)) for k in gamma) / mpmath.gamma(0.5) ** d
        sph *= mpmath.gamma(d / mpmath.mpf(2)) / mpmath.gamma((g + d) / mpmath.mpf(2))
        return float(radial * sph)


def monomial_exponents(d, n):
    rows = []
    for total in range(n + 1):
        for combo in itertools.combinations_with_replacement(range(d), total):
            rows.append(np.bincount(np.asarray(combo, dtype=int), minlength=d))
    return np.array(rows, dtype=int).reshape(-1, d)


def monomials(X, exps):
    X = np.atleast_2d(X)
    return np.prod(X[:, None, :] ** exps[None, :, :], axis=2)


def exact_gram(cfg, exps):
    return np.array([[moment_oracle(cfg, tuple(a + b)) for b in exps] for a in exps])


def moment_kernel(cfg, n, X, Y):
    """P_n(x, y) from exact monomial moments: K_{<=n} - K_{<=n-1}, K_{<=m} = m(x)^T G^{-1} m(y)."""

    def cumulative(m):
        if m < 0:
            return np.zeros(len(X))
        exps = monomial_exponents(cfg.d, m)
        G = exact_gram(cfg, exps)
        MX, MY = monomials(X, exps), monomials(Y, exps)
        return np.sum(MX * np.linalg.solve(G, MY.T).T, axis=1)

    return cumulative(n) - cumulative(n - 1)


def dmu_monomial_matrix(cfg, exps):
    """Matrix of D_mu on the monomial span: D x^g = sum_i g_i(g_i-1) x^{g-2e_i} - |g|(|g|+2mu+d-1) x^g."""
    index = {tuple(e): i for i, e in enumerate(exps)}
    M = np.zeros((len(exps), len(exps)))
    for j, g in enumerate(exps):
        n = int(g.sum())
        M[j, j] -= n * (n + 2 * cfg.mu + cfg.d - 1)
        for i in range(cfg.d):
            if g[i] >= 2:
                h = g.copy()
                h[i] -= 2
                M[index[tuple(h)], j] += g[i] * (g[i] - 1)
    return M


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the lines are printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(number, passed, detail):
        lines.append(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
        print(lines[-1])
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
