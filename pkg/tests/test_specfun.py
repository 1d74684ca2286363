import numpy as np
import pytest
from hypothesis import given, strategies as st

from tevp.exceptions import CapabilityError, DomainError, NumericalRangeError, SingularityError
from tevp.specfun import eval_wave, green, green_grad, green_hankel_form, jh_table, wave


def test_spherical_j0_closed_form():
    for x in (1e-3, 0.5, 3.0, 40.0):
        val, der = eval_wave("SphericalJ", 0, x)
        assert val == pytest.approx(np.sin(x) / x, rel=1e-12)
        assert der.real == pytest.approx(np.cos(x) / x - np.sin(x) / x**2, rel=1e-9, abs=1e-15)


def test_j0_vanishes_at_frozen_root(frozen):
    val, _ = eval_wave("BesselJ", 0, frozen["j0_first_root"])
    assert abs(val) < 1e-10


def test_hankel_matches_large_argument_expansion(frozen):
    ref = complex(*frozen["hankel1_0_at_100"])
    val, _ = eval_wave("Hankel1", 0, 100.0)
    assert abs(val - ref) / abs(ref) < 1e-6


def test_hankel_leading_term_error_is_first_correction():
    # the one-term form is off by about 1/(8x); this pins the phase convention
    x = 100.0
    val, _ = eval_wave("Hankel1", 0, x)
    lead = np.sqrt(2 / (np.pi * x)) * np.exp(1j * (x - np.pi / 4))
    assert abs(val / lead - 1) == pytest.approx(1 / (8 * x), rel=0.01)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_eval_wave_rejects_nonpositive_argument(bad):
    with pytest.raises(DomainError):
        eval_wave("BesselJ", 0, bad)


def test_eval_wave_order_limits():
    with pytest.raises(CapabilityError):
        eval_wave("BesselJ", 201, 1.0)
    with pytest.raises(DomainError):
        eval_wave("BesselJ", -1, 1.0)
    with pytest.raises(DomainError):
        eval_wave("Struve", 0, 1.0)


def test_overflow_is_an_error_not_a_nan():
    with pytest.raises(NumericalRangeError):
        eval_wave("BesselY", 100, 1e-6)


def _representable(*arrays):
    ok = np.ones(np.broadcast(*arrays).shape, dtype=bool)
    for a in arrays:
        ok &= np.isfinite(a) & (np.abs(a) < 1e250)
    return ok


@pytest.mark.parametrize("pair,scale", [
    (("BesselJ", "BesselY"), lambda x: 2 / (np.pi * x)),
    (("SphericalJ", "SphericalY"), lambda x: 1 / x**2),
])
def test_wronskian_on_log_grid(pair, scale):
    n = np.arange(0, 101)[:, None]
    x = np.logspace(-6, 4, 60)[None, :]
    with np.errstate(all="ignore"):
        J, dJ = wave(pair[0], n, x)
        Y, dY = wave(pair[1], n, x)
        W = (J * dY - dJ * Y) / scale(x)
    ok = _representable(Y, dY) & (np.abs(J) > 1e-250)
    assert ok.sum() > 0.7 * ok.size
    assert np.max(np.abs(W[ok] - 1)) < 1e-10


@given(st.integers(0, 60), st.floats(1e-2, 1e3))
def test_wronskian_property(n, x):
    J, dJ = eval_wave("BesselJ", n, x)
    if abs(J) < 1e-250:
        return
    try:
        Y, dY = eval_wave("BesselY", n, x)
    except NumericalRangeError:
        return
    if abs(Y) > 1e250 or abs(dY) > 1e250:
        return
    assert abs((J * dY - dJ * Y) * np.pi * x / 2 - 1) < 1e-10


def test_green_closed_forms():
    g = green(3, 1.0, 1.0)
    assert g == pytest.approx(np.exp(1j) / (4 * np.pi), rel=1e-14)
    assert abs(g) == pytest.approx(0.0796, abs=1e-3)
    assert np.angle(g) == pytest.approx(1.0)
    val, _ = eval_wave("Hankel1", 0, 1.0)
    assert green(2, 2.0, 0.5) == pytest.approx(0.25j * val, rel=1e-14)


@given(st.floats(0.1, 20.0), st.floats(0.05, 10.0))
def test_green_3d_equals_half_order_hankel(kappa, r):
    a = green(3, kappa, r)
    b = green_hankel_form(3, kappa, r)
    assert abs(a - b) <= 1e-12 * abs(a)


def test_green_3d_radial_helmholtz_residual():
    kappa, r, h = 5.0, 2.0, 2e-3
    g = lambda s: green(3, kappa, s) * s
    # (Delta + k^2) G = (1/r) (r G)'' + k^2 G for radial G; fourth-order stencil
    lap = (-g(r + 2 * h) + 16 * g(r + h) - 30 * g(r) + 16 * g(r - h) - g(r - 2 * h)) / (12 * h**2) / r
    res = lap + kappa**2 * green(3, kappa, r)
    assert abs(res) / abs(kappa**2 * green(3, kappa, r)) < 1e-6


def test_green_singularity():
    with pytest.raises(SingularityError):
        green(2, 1.0, 0.0)
    with pytest.raises(SingularityError):
        green_grad(3, 1.0, [0.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        green(4, 1.0, 1.0)


def test_green_grad_3d_closed_form():
    k, x = 2.0, np.array([0.3, -0.4, 1.2])
    r = np.linalg.norm(x)
    ref = np.exp(1j * k * r) * (1j * k * r - 1) / (4 * np.pi * r**2) * x / r
    assert np.allclose(green_grad(3, k, x), ref, rtol=1e-13)


@given(st.sampled_from([2, 3]), st.floats(0.5, 10.0),
       st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_green_grad_odd(d, kappa, v):
    v = np.array(v[:d])
    if np.linalg.norm(v) < 1e-3:
        return
    assert np.allclose(green_grad(d, kappa, -v), -green_grad(d, kappa, v), rtol=1e-14, atol=0)


@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_green_grad_finite_difference(theta, phi):
    kappa, r, h = 3.0, 0.7, 1e-5
    disp = r * np.array([np.cos(theta), np.sin(theta)])
    e = np.array([np.cos(phi), np.sin(phi)])
    fd = (green(2, kappa, np.linalg.norm(disp + h * e)) - green(2, kappa, np.linalg.norm(disp - h * e))) / (2 * h)
    an = green_grad(2, kappa, disp) @ e
    assert abs(fd - an) <= 1e-7 * max(abs(an), abs(green(2, kappa, r)))


def test_jh_table_matches_direct_products_at_low_order():
    from scipy import special
    tab = jh_table(0.0, 30, 7.0)
    n = np.arange(31)
    direct = special.jv(n, 7.0) * special.hankel1(n, 7.0)
    assert np.allclose(tab["JH"], direct, rtol=1e-10)
