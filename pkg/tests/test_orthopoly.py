import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import eval_gegenbauer

from ballquad.orthopoly import (
    WeightConfig,
    gauss_jacobi,
    gegenbauer_eval,
    gegenbauer_table,
    jacobi_mass,
    normalization_b,
    orthonormal_jacobi,
)

EXPONENTS = (-0.5, 0.0, 0.5, 1.0, 1.5)


def beta_moment(k, a, b):
    """int_{-1}^{1} t^k (1-t)^a (1+t)^b dt by binomial expansion at 50 digits."""
    with mpmath.workdps(50):
        a, b = mpmath.mpf(a), mpmath.mpf(b)
        s = mpmath.fsum(
            mpmath.binomial(k, i) * 2**i * (-1) ** (k - i) * mpmath.beta(i + b + 1, a + 1) for i in range(k + 1)
        )
        return float(2 ** (a + b + 1) * s)


def test_midpoint_rule():
    g = gauss_jacobi(1, 0.0, 0.0)
    assert g.nodes.tolist() == pytest.approx([0.0], abs=1e-15)
    assert g.weights.tolist() == pytest.approx([2.0], rel=1e-14)


def test_two_point_legendre():
    g = gauss_jacobi(2, 0.0, 0.0)
    s = 1 / math.sqrt(3)
    assert g.nodes == pytest.approx([-s, s], rel=1e-14)
    assert g.weights == pytest.approx([1.0, 1.0], rel=1e-14)


@pytest.mark.parametrize("n", [1, 3, 8, 20])
@pytest.mark.parametrize("a,b", [(0.0, 0.0), (-0.5, -0.5), (0.5, 1.5), (1.5, -0.5), (1.0, 0.0)])
def test_moments_match_beta_oracle(n, a, b):
    g = gauss_jacobi(n, a, b)
    for k in range(2 * n):
        exact = beta_moment(k, a, b)
        got = math.fsum(g.weights * g.nodes**k)
        if a == b and k % 2:
            assert abs(got) <= 1e-12
        else:
            assert abs(got - exact) <= 1e-10 * abs(exact), (k, got, exact)


def test_mass_matches_oracle():
    for a in EXPONENTS:
        for b in EXPONENTS:
            assert jacobi_mass(a, b) == pytest.approx(beta_moment(0, a, b), rel=1e-13)


@pytest.mark.parametrize("a", EXPONENTS)
@pytest.mark.parametrize("b", EXPONENTS)
def test_positivity_and_ordering(a, b):
    for n in (1, 2, 7, 64, 255, 256):
        g = gauss_jacobi(n, a, b)
        assert np.all(g.weights > 0)
        assert np.all(np.diff(g.nodes) > 0)
        assert g.nodes[0] > -1 and g.nodes[-1] < 1
        assert abs(g.weights.sum() - jacobi_mass(a, b)) <= 1e-12 * jacobi_mass(a, b)


@pytest.mark.parametrize("a,b", [(-1.0, 0.0), (0.0, -1.5)])
def test_rejects_nonintegrable_weights(a, b):
    with pytest.raises(ValueError):
        gauss_jacobi(3, a, b)


def test_orthonormal_jacobi_is_orthonormal():
    a, b = 0.5, -0.5
    g = gauss_jacobi(30, a, b)
    P = orthonormal_jacobi(20, a, b, g.nodes)
    G = P.T @ (P * (g.weights / g.weights.sum())[:, None])
    assert np.max(np.abs(G - np.eye(21))) < 1e-12


def gegenbauer_series(n, lam, t):
    with mpmath.workdps(40):
        lam, t = mpmath.mpf(lam), mpmath.mpf(t)
        s = mpmath.fsum(
            (-1) ** k * mpmath.gamma(n - k + lam) / (mpmath.gamma(lam) * mpmath.factorial(k) * mpmath.factorial(n - 2 * k)) * (2 * t) ** (n - 2 * k)
            for k in range(n // 2 + 1)
        )
        return float(s)


def test_gegenbauer_low_degrees():
    for lam in (0.25, 1.0, 3.5):
        assert gegenbauer_eval(0, lam, 0.7) == 1.0
        assert gegenbauer_eval(1, lam, 0.5) == pytest.approx(lam, rel=1e-15)


def test_gegenbauer_series_oracle():
    assert gegenbauer_eval(5, 1.5, 0.3) == pytest.approx(gegenbauer_series(5, 1.5, 0.3), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(0, 60),
    lam=st.floats(0.1, 10.0),
    t=st.floats(-1.0, 1.0),
)
def test_gegenbauer_matches_scipy(n, lam, t):
    ours = gegenbauer_eval(n, lam, t)
    ref = eval_gegenbauer(n, lam, t)
    scale = eval_gegenbauer(n, lam, 1.0)
    assert abs(ours - ref) <= 1e-11 * scale


def test_gegenbauer_recurrence_residual():
    t = np.linspace(-1, 1, 1000)
    for lam in (0.5, 1.0, 2.5):
        C = gegenbauer_table(50, lam, t)
        for k in range(2, 51):
            res = k * C[:, k] - 2 * (k + lam - 1) * t * C[:, k - 1] + (k + 2 * lam - 2) * C[:, k - 2]
            scale = max(1.0, np.abs(C[:, k]).max())
            assert np.max(np.abs(res)) <= 1e-12 * k * scale


def test_normalization_closed_forms():
    assert normalization_b(1, 0.0) == pytest.approx(1 / math.pi, rel=1e-14)
    assert normalization_b(1, 0.5) == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("mu", [0.0, 0.5, 1.5, 4.0])
def test_normalization_by_radial_quadrature(d, mu):
    # b * area(S^{d-1}) * int_0^1 r^{d-1} (1-r^2)^{mu-1/2} dr = 1, integral done numerically
    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    val, _ = integrate.quad(lambda r: r ** (d - 1) * (1 - r * r) ** (mu - 0.5), 0, 1, limit=200)
    assert normalization_b(d, mu) * area * val == pytest.approx(1.0, rel=1e-9)


def test_weight_config_validation():
    with pytest.raises(ValueError):
        WeightConfig(0, 0.5)
    with pytest.raises(ValueError):
        WeightConfig(2, -0.1)
    cfg = WeightConfig(2, 0.5)
    assert cfg.lam == pytest.approx(1.0)
    assert cfg.weight(np.zeros(2)) == pytest.approx(cfg.b_d_mu)
