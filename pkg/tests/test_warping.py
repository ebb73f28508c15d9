import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from grwflow.errors import InvalidWarpingError, WarpingDomainError
from grwflow.warping import WarpingFactor, eval_warping, ncc_holds, ncc_margin

FAMILIES = [
    WarpingFactor.product(0.0, 2.0, 1.5),
    WarpingFactor("de_sitter", -1.0, 2.0, (0.7,)),
    WarpingFactor.gaussian(-1.0, 3.0, 0.8),
]


@pytest.mark.parametrize("w", FAMILIES, ids=lambda w: w.family)
def test_derivatives_match_finite_differences(w):
    r = np.linspace(w.a + 0.1, w.b - 0.1, 17)
    h = 1e-5
    fd1 = (w.theta(r + h) - w.theta(r - h)) / (2 * h)
    fd2 = (w.dtheta(r + h) - w.dtheta(r - h)) / (2 * h)
    np.testing.assert_allclose(w.dtheta(r), fd1, atol=1e-8)
    np.testing.assert_allclose(w.ddtheta(r), fd2, atol=1e-8)


@pytest.mark.parametrize("w", FAMILIES, ids=lambda w: w.family)
@pytest.mark.parametrize("n", [1, 2])
def test_antiderivative_and_power_integral_match_quadrature(w, n):
    for r in np.linspace(w.a, w.b - 0.05, 7):
        Th = integrate.quad(w.theta, w.a, r, epsabs=1e-13, epsrel=1e-13)[0]
        Pn = integrate.quad(lambda s: w.theta(s) ** n, w.a, r, epsabs=1e-13, epsrel=1e-13)[0]
        assert w.antiderivative(r) == pytest.approx(Th, abs=1e-11)
        assert w.power_integral(r, n) == pytest.approx(Pn, abs=1e-11)


def test_power_integral_quadrature_fallback():
    w = WarpingFactor("de_sitter", -1.0, 1.0, (1.0,))
    r = 0.4
    ref = integrate.quad(lambda s: w.theta(s) ** 3, w.a, r, epsrel=1e-13)[0]
    assert w.power_integral(r, 3) == pytest.approx(ref, rel=1e-10)


def test_custom_family_matches_builtin():
    g = WarpingFactor.gaussian(-1.0, 3.0, 1.0)
    c = WarpingFactor.custom(lambda r: math.exp(-r * r / 2), lambda r: -r * math.exp(-r * r / 2),
                             lambda r: (r * r - 1) * math.exp(-r * r / 2), -1.0, 3.0)
    r = np.array([-0.5, 0.0, 1.2, 2.9])
    np.testing.assert_allclose(c.theta(r), g.theta(r), rtol=1e-14)
    np.testing.assert_allclose(c.antiderivative(r), g.antiderivative(r), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(c.power_integral(r, 2), g.power_integral(r, 2), rtol=1e-9, atol=1e-12)


def test_eval_returns_all_four():
    w = FAMILIES[1]
    t, d, dd, Th = eval_warping(w, 0.3)
    assert (t, d, dd, Th) == (w.theta(0.3), w.dtheta(0.3), w.ddtheta(0.3), w.antiderivative(0.3))


def test_domain_is_half_open():
    w = FAMILIES[0]
    w.theta(w.a)
    with pytest.raises(WarpingDomainError):
        w.theta(w.b)
    with pytest.raises(WarpingDomainError):
        w.antiderivative(np.array([0.5, w.a - 1e-3]))


def test_invalid_parameters_rejected():
    with pytest.raises(InvalidWarpingError):
        WarpingFactor.gaussian(-1, 1, -2.0)
    with pytest.raises(ValueError):
        WarpingFactor("product", 1.0, 0.0)
    with pytest.raises(ValueError):
        WarpingFactor("nonsense", 0.0, 1.0)


def test_nonpositive_custom_theta_is_rejected():
    w = WarpingFactor.custom(lambda r: r, lambda r: 1.0, lambda r: 0.0, -1.0, 1.0)
    with pytest.raises(InvalidWarpingError):
        w.theta(-0.5)


@given(r=st.floats(-0.9, 2.9), s=st.floats(0.3, 3.0), n=st.integers(1, 3))
def test_gaussian_ncc_margin_closed_form(r, s, n):
    # theta theta'' - theta'^2 = -theta^2 / s^2 on a flat fiber
    w = WarpingFactor.gaussian(-1.0, 3.0, s)
    assert ncc_margin(w, r, 0.0, n) == pytest.approx((n - 1) * w.theta(r) ** 2 / s**2, rel=1e-12)


def test_ncc_classification():
    ds = WarpingFactor("de_sitter", -1.0, 1.0, (1.0,))
    ok, mu = ncc_holds(ds, 1.0, 2)  # round sphere fiber: margin vanishes identically
    assert ok and abs(mu) < 1e-12
    ok, mu = ncc_holds(ds, 0.0, 2)  # flat fiber: margin is -(n - 1)
    assert not ok and mu == pytest.approx(-1.0)
    assert ncc_holds(WarpingFactor.product(0, 1, 2.0), 0.0, 2)[0]
    assert ncc_holds(WarpingFactor.gaussian(-1, 3, 1.0), 0.0, 2)[1] > 0


def test_worked_values():
    p = WarpingFactor.product(0.0, 1.0, 1.0)
    assert eval_warping(p, 0.7) == pytest.approx((1.0, 0.0, 0.0, 0.7))
    d = WarpingFactor("de_sitter", -1.0, 1.0, (1.0,))
    assert eval_warping(d, 0.0) == pytest.approx((1.0, 0.0, 1.0, math.sinh(1.0)), rel=1e-14)
    g = WarpingFactor.gaussian(-1.0, 3.0, 1.0)
    Th = integrate.quad(lambda s: math.exp(-s * s / 2), -1.0, 0.0, epsabs=1e-14)[0]
    assert eval_warping(g, 0.0) == pytest.approx((1.0, 0.0, -1.0, Th), rel=1e-12)
    assert ncc_margin(p, 0.4, 0.0, 2) == 0.0
    assert ncc_margin(d, 0.3, 1.0, 2) == pytest.approx(0.0, abs=1e-14)
    assert ncc_margin(g, 0.0, 0.0, 2) == pytest.approx(1.0)
