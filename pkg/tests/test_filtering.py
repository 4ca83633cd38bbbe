import math

import numpy as np
import pytest

from ballquad.corpus import build_corpus
from ballquad.cubature import build_rule
from ballquad.filtering import FilteredKernel, default_filter, eta_eval, filtered_kernel_eval, v_l_apply
from ballquad.hyperinterp import probe_points
from ballquad.orthopoly import WeightConfig
from ballquad.spectral import BandlimitedFunction, kernel_eval

from conftest import CONFIGS, random_points, random_poly

ETA = default_filter()


def test_eta_examples():
    assert eta_eval(ETA, 0.5) == 1.0
    assert eta_eval(ETA, 3.0) == 0.0
    assert eta_eval(ETA, 1.5) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        eta_eval(ETA, -0.1)


def test_eta_sandwich():
    lo, hi = np.linspace(0, 1, 1000), np.linspace(2, 4, 1000)
    assert np.all(eta_eval(ETA, lo) == 1.0)
    assert np.all(eta_eval(ETA, hi) == 0.0)
    mid = eta_eval(ETA, np.linspace(0, 4, 4001))
    assert np.all((mid >= 0) & (mid <= 1))
    assert np.all(np.diff(mid) <= 0)


def test_eta_difference_quotients_bounded():
    # smooth transition: quotients converge as h shrinks instead of blowing up
    bounds = []
    for h in (1e-3, 5e-4):
        t = np.arange(1.0, 2.0 + h / 2, h)
        e = eta_eval(ETA, t)
        d1 = np.diff(e) / h
        d2 = np.diff(e, 2) / h**2
        bounds.append((np.abs(d1).max(), np.abs(d2).max()))
    (a1, a2), (b1, b2) = bounds
    assert a1 < 5 and a2 < 50
    assert b1 == pytest.approx(a1, rel=1e-2) and b2 == pytest.approx(a2, rel=5e-2)


def test_level_weights_vanish_past_2L():
    for L in (1, 3, 8):
        w = ETA.level_weights(L)
        assert len(w) == 2 * L
        assert np.all(w[: L + 1] == 1.0)
        assert eta_eval(ETA, 2 * L / L) == 0.0


@pytest.mark.parametrize("cfg", CONFIGS, ids=str)
def test_level_one_kernel(cfg, rng):
    X, Y = random_points(cfg, 20, rng), random_points(cfg, 20, rng)
    K = FilteredKernel(1, ETA, cfg)
    assert np.allclose(filtered_kernel_eval(K, X, Y), 1 + kernel_eval(cfg, 1, X, Y), rtol=1e-12)


@pytest.mark.parametrize("cfg", CONFIGS, ids=str)
def test_kernel_has_mean_one(cfg, rng):
    L = 5
    K = FilteredKernel(L, ETA, cfg)
    rule = build_rule(cfg, 2 * L)
    for x in random_points(cfg, 5, rng):
        assert rule.integrate(lambda Y: K(np.broadcast_to(x, Y.shape), Y)) == pytest.approx(1.0, rel=1e-12)


def test_d1_level_two_against_legendre():
    cfg = WeightConfig(1, 0.5)
    rng = np.random.default_rng(3)
    x, y = rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 20)
    # w = 1/2 on [-1, 1]: orthonormal polynomials sqrt(2k+1) P_k
    oracle = sum(
        float(eta_eval(ETA, k / 2)) * (2 * k + 1) * np.polynomial.legendre.legval(x, np.eye(4)[k]) * np.polynomial.legendre.legval(y, np.eye(4)[k])
        for k in range(4)
    )
    K = FilteredKernel(2, ETA, cfg)
    assert np.allclose(K(x[:, None], y[:, None]), oracle, rtol=1e-10, atol=1e-12)


def test_kernel_symmetric_and_matrix_route(rng):
    cfg = WeightConfig(2, 0.5)
    K = FilteredKernel(6, ETA, cfg)
    X, Y = random_points(cfg, 30, rng), random_points(cfg, 30, rng)
    assert np.max(np.abs(K(X, Y) - K(Y, X))) < 1e-10
    assert np.max(np.abs(np.diag(K.matrix(X, Y)) - K(X, Y))) < 1e-10 * np.abs(K(X, Y)).max()


@pytest.mark.parametrize("L", [1, 2, 4, 8])
def test_v_l_reproduces_pi_l(L, rng):
    cfg = WeightConfig(2, 0.5)
    rule = build_rule(cfg, 3 * L)
    X = random_points(cfg, 50, rng)
    for _ in range(100):
        P = random_poly(cfg, L, rng)
        assert np.max(np.abs(v_l_apply(cfg, P, L, ETA, rule)(X) - P(X))) <= 1e-9 * max(1.0, np.abs(P(X)).max())


def test_v_l_constants_and_degree():
    cfg = WeightConfig(2, 1.5)
    one = BandlimitedFunction(0, lambda X: np.ones(len(X)))
    out = v_l_apply(cfg, one, 3, ETA, build_rule(cfg, 1))
    assert np.allclose(out(np.zeros((3, 2))), 1.0)
    P = random_poly(cfg, 12, np.random.default_rng(0))
    assert v_l_apply(cfg, P, 3, ETA, build_rule(cfg, 17)).degree <= 5


def test_v_l_rejects_weak_rule():
    cfg = WeightConfig(2, 0.5)
    P = random_poly(cfg, 6, np.random.default_rng(0))
    with pytest.raises(ValueError):
        v_l_apply(cfg, P, 4, ETA, build_rule(cfg, 8))


def test_v_l_uniformly_bounded():
    cfg = WeightConfig(2, 0.5)
    f = build_corpus(cfg, ["lacunary(2)"])[0].evaluator
    X = probe_points(cfg, 1500)
    # stress family: single high-degree ridge terms and the truncated lacunary sum
    family = [f.__class__(cfg, f.directions[j : j + 1], (f.degrees[j],), (1.0,)) for j in (3, 4, 5)]
    family.append(f.__class__(cfg, f.directions[:6], f.degrees[:6], f.amplitudes[:6]))
    ratios = []
    for L in (2, 4, 8, 16):
        worst = 0.0
        for g in family:
            P = BandlimitedFunction(g.degree, g)
            V = v_l_apply(cfg, P, L, ETA, build_rule(cfg, 2 * g.degree))
            worst = max(worst, np.abs(V(X)).max() / np.abs(P(X)).max())
        ratios.append(worst)
    assert max(ratios) <= 3.0, ratios


def test_v_l_decay_on_lacunary():
    cfg = WeightConfig(2, 0.5)
    f = build_corpus(cfg, ["lacunary(2)"])[0].evaluator
    X = probe_points(cfg, 1500)
    Ls = [2**i for i in range(3, 9)]
    errs = [np.abs(f.filtered_residual(X, L)).max() for L in Ls]
    slope = np.polyfit(np.log(Ls), np.log(errs), 1)[0]
    assert slope <= -2 + 0.3


def test_kernel_l1_norm_uniform():
    cfg = WeightConfig(2, 0.5)
    X = probe_points(cfg, 50)[:50]
    maxima = []
    for L in (4, 8, 16, 32):
        K = FilteredKernel(L, ETA, cfg)
        rule = build_rule(cfg, 8 * L)
        maxima.append(float(np.max(np.abs(K.matrix(X, rule.nodes)) @ rule.weights)))
    assert max(maxima) / min(maxima) < 2.0, maxima
    assert min(maxima) >= 1.0 - 1e-12
