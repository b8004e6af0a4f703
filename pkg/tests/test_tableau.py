from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rkcertify.tableau import (
    ButcherTableau,
    StepFailure,
    embedded_error_polynomial,
    embedded_stability_polynomial,
    make_tableau,
    rk_step,
    stability_polynomial,
)

NAMES = ["euler", "heun2_euler1", "bs3"]


def _rooted_tree_conditions(A, b, c, order):
    """Order conditions up to ``order`` (<= 3) in exact arithmetic."""
    s = len(b)
    out = []
    if order >= 1:
        out.append((sum(b), F(1)))
    if order >= 2:
        out.append((sum(b[i] * c[i] for i in range(s)), F(1, 2)))
    if order >= 3:
        out.append((sum(b[i] * c[i] ** 2 for i in range(s)), F(1, 3)))
        out.append((sum(b[i] * A[i][j] * c[j] for i in range(s) for j in range(s)), F(1, 6)))
    return out


def _fsal_extended(tab):
    """Stage matrix with the FSAL stage appended (row = b)."""
    A = [list(row) + [F(0)] for row in tab.A_exact] + [list(tab.b_exact) + [F(0)]]
    c = list(tab.c_exact) + [F(1)]
    return A, c


@pytest.mark.parametrize("name", NAMES)
def test_order_conditions_main(name):
    tab = make_tableau(name)
    for got, want in _rooted_tree_conditions(tab.A_exact, tab.b_exact, tab.c_exact, tab.p):
        assert got == want


@pytest.mark.parametrize("name", ["heun2_euler1", "bs3"])
def test_order_conditions_embedded(name):
    tab = make_tableau(name)
    if tab.fsal:
        A, c = _fsal_extended(tab)
    else:
        A, c = [list(r) for r in tab.A_exact], list(tab.c_exact)
    conds = _rooted_tree_conditions(A, tab.b_hat_exact, c, tab.p_hat)
    for got, want in conds:
        assert got == want
    # the embedded weights must not also satisfy the next order
    nxt = _rooted_tree_conditions(A, tab.b_hat_exact, c, tab.p_hat + 1)[len(conds):]
    assert any(got != want for got, want in nxt)


def test_registry_examples():
    e = make_tableau("euler")
    assert e.stages == 1 and e.p == 1 and list(e.b) == [1.0]
    h = make_tableau("heun2_euler1")
    assert list(h.c) == [0.0, 1.0] and list(h.b) == [0.5, 0.5] and list(h.b_hat) == [1.0, 0.0]
    assert (h.p, h.p_hat) == (2, 1)
    b = make_tableau("bs3")
    assert b.fsal and (b.p, b.p_hat) == (3, 2)
    assert b.b_exact == (F(2, 9), F(1, 3), F(4, 9))
    assert b.b_hat_exact == (F(7, 24), F(1, 4), F(1, 3), F(1, 8))
    assert b.c_exact == (0, F(1, 2), F(3, 4))
    assert make_tableau("heun2").name == "heun2_euler1"


def test_unknown_method_lists_known():
    with pytest.raises(ValueError, match="bs3"):
        make_tableau("rk4")


def test_invalid_tableaus_rejected():
    with pytest.raises(ValueError, match="lower triangular"):
        ButcherTableau("x", ((F(0), F(1)), (F(0), F(0))), (F(1, 2), F(1, 2)), (F(1), F(0)), 1)
    with pytest.raises(ValueError, match="row-sum"):
        ButcherTableau("x", ((F(0), F(0)), (F(1), F(0))), (F(1, 2), F(1, 2)), (F(0), F(1, 2)), 1)
    with pytest.raises(ValueError, match="sum to one"):
        ButcherTableau("x", ((F(0),),), (F(1, 2),), (F(0),), 1)
    with pytest.raises(ValueError, match="length"):
        ButcherTableau("x", ((F(0),),), (F(1),), (F(0),), 1, b_hat_exact=(F(1),), fsal=True)


@pytest.mark.parametrize(
    "name, dt, expected",
    [("euler", 0.1, 0.9), ("heun2_euler1", 1.0, 0.5), ("bs3", 1.0, 1.0 / 3.0)],
)
def test_rk_step_linear_examples(name, dt, expected):
    u_next, ks, _ = rk_step(make_tableau(name), lambda t, u: -u, 0.0, np.array([1.0]), dt)
    assert u_next[0] == pytest.approx(expected, rel=1e-15)
    assert len(ks) == make_tableau(name).stages


def test_rk_step_fsal_derivative_and_no_mutation():
    tab = make_tableau("bs3")
    f = lambda t, u: np.array([np.cos(t) * u[0]])
    u = np.array([2.0])
    u_next, ks, f_next = rk_step(tab, f, 0.3, u, 0.1)
    assert u[0] == 2.0
    np.testing.assert_array_equal(f_next, f(0.4, u_next))
    _, ks2, _ = rk_step(tab, f, 0.3, u, 0.1, f0=ks[0])
    np.testing.assert_array_equal(ks2[1], ks[1])
    assert rk_step(make_tableau("euler"), f, 0.0, u, 0.1)[2] is None


def test_rk_step_non_finite_raises():
    with pytest.raises(StepFailure):
        rk_step(make_tableau("heun2"), lambda t, u: np.array([np.inf]) * u, 0.0, np.array([1.0]), 0.1)
    with pytest.raises(ValueError):
        rk_step(make_tableau("euler"), lambda t, u: u, 0.0, np.array([1.0]), 0.0)


@pytest.mark.parametrize(
    "name, coeffs",
    [("euler", [1, 1]), ("heun2_euler1", [1, 1, 0.5]), ("bs3", [1, 1, 0.5, 1 / 6])],
)
def test_stability_polynomial(name, coeffs):
    np.testing.assert_allclose(stability_polynomial(make_tableau(name)).coef, coeffs, rtol=0, atol=1e-16)


def _linear_step_amplification(tab, z, weights=None):
    """Independent route: run the stages on the complex scalar problem directly."""
    s = tab.stages
    ks = []
    for i in range(s):
        y = 1.0 + sum(complex(tab.A[i, j]) * ks[j] for j in range(i))
        ks.append(z * y)
    u1 = 1.0 + sum(tab.b[i] * ks[i] for i in range(s))
    if weights is None:
        return u1
    ks_ext = ks + [z * u1] if tab.fsal else ks
    return 1.0 + sum(w * k for w, k in zip(weights, ks_ext))


@pytest.mark.parametrize("name", ["heun2_euler1", "bs3"])
def test_error_polynomial_matches_direct_stage_evaluation(name):
    tab = make_tableau(name)
    R, Rh, E = stability_polynomial(tab), embedded_stability_polynomial(tab), embedded_error_polynomial(tab)
    rng = np.random.default_rng(3)
    for z in rng.normal(size=8) + 1j * rng.normal(size=8):
        u1 = _linear_step_amplification(tab, z)
        uh = _linear_step_amplification(tab, z, tab.b_hat)
        assert R(z) == pytest.approx(u1, rel=1e-13)
        assert Rh(z) == pytest.approx(uh, rel=1e-13)
        assert E(z) == pytest.approx(u1 - uh, rel=1e-12, abs=1e-14)


@pytest.mark.invariant
def test_error_polynomial_examples():
    np.testing.assert_array_equal(embedded_error_polynomial(make_tableau("heun2")).coef, [0, 0, 0.5])
    E = embedded_error_polynomial(make_tableau("bs3"))
    assert E.degree() == 4
    assert np.all(E.coef[:3] == 0.0) and E.coef[3] != 0.0


def test_error_polynomial_vanishes_for_identical_weights():
    h = make_tableau("heun2")
    same = ButcherTableau("same", h.A_exact, h.b_exact, h.c_exact, 2, b_hat_exact=h.b_exact, p_hat=2)
    assert np.all(embedded_error_polynomial(same).coef == 0.0)


def test_missing_embedded_weights():
    with pytest.raises(ValueError):
        embedded_error_polynomial(make_tableau("euler"))


# properties

@pytest.mark.invariant
@settings(max_examples=60, deadline=None)
@given(
    name=st.sampled_from(NAMES),
    re=st.floats(-3, 1),
    im=st.floats(-3, 3),
    u=st.floats(-10, 10),
)
def test_step_equals_stability_function(name, re, im, u):
    tab = make_tableau(name)
    lam = complex(re, im)
    M = np.array([[re, -im], [im, re]])
    dt = 0.7
    u0 = np.array([u, 0.5 * u])
    u1, _, _ = rk_step(tab, lambda t, v: M @ v, 0.0, u0, dt)
    want = stability_polynomial(tab)(lam * dt) * complex(u0[0], u0[1])
    assert complex(u1[0], u1[1]) == pytest.approx(want, rel=1e-12, abs=1e-12)


@pytest.mark.invariant
@pytest.mark.parametrize("name", NAMES)
def test_observed_convergence_order(name):
    tab = make_tableau(name)
    f = lambda t, u: -u
    errs = []
    for n in [10 * 2**j for j in range(5)]:
        u, dt = np.array([1.0]), 1.0 / n
        for i in range(n):
            u = rk_step(tab, f, i * dt, u, dt)[0]
        errs.append(abs(u[0] - np.exp(-1.0)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - tab.p) < 0.2), orders
