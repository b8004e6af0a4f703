import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from rkcertify.estimators import (
    QUAD_ATOL,
    embedded_weighted,
    residual_gronwall_increment,
    residual_norm_l1,
    residual_norm_l2,
    weighted_residual,
)
from rkcertify.quadrature import QuadratureResult
from rkcertify.reconstruction import RECONSTRUCTION_FOR_METHOD, build_reconstruction
from rkcertify.tableau import make_tableau, rk_step

from oracles import closed_form, linear_step


@pytest.mark.parametrize(
    "method, lam, dt, l1, l2",
    [
        ("euler", -1.0, 0.1, 5.0e-3, 0.1**2 / math.sqrt(3)),
        ("heun2_euler1", -2.0, 0.5, 1 / 6, 1 / (2 * math.sqrt(5))),
    ],
)
def test_closed_form_examples(method, lam, dt, l1, l2):
    rec, f, _ = linear_step(method, lam, dt, [1.0, 0.0])
    assert residual_norm_l1(rec, f, 0.0, vectorized=False).value == pytest.approx(l1, rel=1e-9)
    assert residual_norm_l2(rec, f, 0.0, vectorized=False).value == pytest.approx(l2, rel=1e-9)


def test_bs3_central_l2_example():
    rec, f, _ = linear_step("bs3", -1.0, 1.0, [1.0, 0.0])
    want = math.sqrt(14) / (6 * math.sqrt(105))
    assert want == pytest.approx(0.0608581, abs=5e-8)
    assert residual_norm_l2(rec, f, 0.0).value == pytest.approx(want, rel=1e-9)


def test_zero_residual():
    # f := u_hat' for a linear reconstruction -> constant slope
    rec = build_reconstruction("linear", [1.0, 2.0], None, [3.0, 2.5], dt=2.0)
    slope = (np.array([3.0, 2.5]) - np.array([1.0, 2.0])) / 2.0
    f = lambda t, u: np.broadcast_to(slope[:, None], np.shape(u)) if np.ndim(u) == 2 else slope
    assert residual_norm_l1(rec, f, 0.0, vectorized=True).value == 0.0
    assert residual_norm_l2(rec, f, 0.0, vectorized=True).value == 0.0


@pytest.mark.invariant
@settings(max_examples=60, deadline=None)
@given(
    method=st.sampled_from(["euler", "heun2_euler1", "bs3"]),
    r=st.floats(0.01, 10.0),
    ang=st.floats(math.pi / 2, 3 * math.pi / 2),
    dt=st.floats(0.01, 1.0),
    u=st.tuples(st.floats(-5, 5), st.floats(-5, 5)).filter(lambda v: math.hypot(*v) > 1e-3),
)
def test_linear_problem_oracle_equivalence(method, r, ang, dt, u):
    lam = r * complex(math.cos(ang), math.sin(ang))
    rec, f, _ = linear_step(method, lam, dt, u)
    unorm = math.hypot(*u)
    for norm, fn in (("l1", residual_norm_l1), ("l2", residual_norm_l2)):
        want = closed_form(method, norm, lam, dt, unorm)
        got = fn(rec, f, 0.0, rtol=1e-8, atol=QUAD_ATOL).value
        assert got == pytest.approx(want, rel=1e-7, abs=1e-13)


@pytest.mark.invariant
@pytest.mark.parametrize("method", ["euler", "heun2_euler1", "bs3"])
def test_raw_norm_scales_like_dt_power(method):
    tab = make_tableau(method)
    f = lambda t, u: np.cos(t) * u - 0.5 * u**2
    u0 = np.array([1.2])
    l1 = []
    # small enough that bs3 is past its pre-asymptotic range
    for dt in [0.05 / 2**j for j in range(5)]:
        u1, _, _ = rk_step(tab, f, 0.3, u0, dt)
        rec = build_reconstruction(RECONSTRUCTION_FOR_METHOD[tab.name], u0, f(0.3, u0), u1, f(0.3 + dt, u1), dt)
        l1.append(residual_norm_l1(rec, f, 0.3, vectorized=True).value)
    slopes = np.log2(np.array(l1[:-1]) / np.array(l1[1:]))
    assert np.all(np.abs(slopes - (tab.p + 1)) < 0.2), slopes


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(s=st.floats(-50, 50).filter(lambda x: abs(x) > 1e-3), method=st.sampled_from(["euler", "heun2_euler1", "bs3"]))
def test_homogeneity(s, method):
    lam = complex(-1.5, 2.0)
    u = np.array([0.3, -0.8])
    rec, f, u1 = linear_step(method, lam, 0.4, u)
    recs, _, _ = linear_step(method, lam, 0.4, s * u)
    for fn in (residual_norm_l1, residual_norm_l2):
        base = fn(rec, f, 0.0).value
        assert fn(recs, f, 0.0).value == pytest.approx(abs(s) * base, rel=1e-8)


def test_gronwall_increment_with_zero_lipschitz_matches_l1():
    rec, f, _ = linear_step("bs3", complex(-2, 1), 0.3, [1.0, 1.0])
    l1 = residual_norm_l1(rec, f, 0.0, rtol=1e-12).value
    g = residual_gronwall_increment(rec, f, 0.0, 0.0, rtol=1e-12)
    # includes a rounding allowance of a few ulps of ||u_hat'|| per unit time
    assert l1 <= g.value <= l1 + 1e-13


def test_gronwall_increment_weight():
    rec, f, _ = linear_step("heun2_euler1", -1.0, 0.5, [1.0, 0.0])
    # residual is (1/2) tau^2 |lambda|^3 |u|; weight exp(-L (t_n + tau - t0))
    L, tn = 2.0, 0.25
    want = integrate.quad(lambda s: 0.5 * s * s * math.exp(-L * (tn + s)), 0, 0.5, epsrel=1e-13)[0]
    got = residual_gronwall_increment(rec, lambda t, u: f(t, u), tn, L, t0=0.0, rtol=1e-12).value
    assert got == pytest.approx(want, rel=1e-9)


def test_weighted_residual_examples():
    assert weighted_residual(1e-4, [0.5], [0.5], 1e-4, 0.0).w == pytest.approx(1.0)
    assert weighted_residual(5e-3, [1.0], [0.9], 1e-4, 1e-4).w == pytest.approx(25.0)
    assert weighted_residual(0.0, [1.0], [1.0], 1e-4, 1e-4).w == 0.0
    with pytest.raises(ValueError):
        weighted_residual(1.0, [0.0], [0.0], 0.0, 1.0)


def test_flagged_quadrature_inflates():
    q = QuadratureResult(1e-4, 2e-4, 10_000, converged=False)
    est = weighted_residual(q, [0.0], [0.0], 1e-4, 0.0, k=3)
    assert est.flagged and est.w == pytest.approx(3.0) and est.k == 3


def test_embedded_examples():
    assert embedded_weighted([1.0], [1.0 - 1e-4], [0.5], 1e-4, 0.0).w == pytest.approx(1.0)
    assert embedded_weighted([1.0, 2.0], [1.0, 2.0], [0.0, 0.0], 1e-4, 1e-4).w == 0.0
    w = embedded_weighted([1e-4, 2e-4], [0.0, 0.0], [0.0, 0.0], 1e-4, 0.0).w
    assert w == pytest.approx(math.sqrt(2.5), rel=1e-14)
    with pytest.raises(ValueError):
        embedded_weighted([0.0], [0.0], [0.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        embedded_weighted([0.0, 1.0], [0.0], [0.0], 1e-4, 0.0)


def test_embedded_uses_componentwise_max():
    # denominators 1e-4 + 1e-4 * max(|u_i^{n+1}|, |u_i^n|) -> (1e-3, 2e-4)
    est = embedded_weighted([-9.0, 0.5], [-9.0 + 1e-3, 0.5], [2.0, 1.0], 1e-4, 1e-4)
    assert est.w == pytest.approx(math.sqrt(0.5), rel=1e-9)
