import numpy as np
import pytest
from hypothesis import given, strategies as st

from tevp.exceptions import CapabilityError, DomainError, GeometryError
from tevp.geometry import (
    BumpFunction, build_surface, bump, circle, ellipse, ellipsoid, kite, offset_surface, sphere, surface_integral,
)


def test_circle_length():
    assert circle(1.0, 64).measure == pytest.approx(2 * np.pi, abs=1e-12)


def test_sphere_area():
    assert sphere(1.0, 16).measure == pytest.approx(4 * np.pi, abs=1e-10)


def test_kite_length_self_convergence_from_64():
    # fails: the speed of this parametrization has complex singularities close
    # enough to the real axis that N=64 is only accurate to about 3e-7
    assert abs(kite(64).measure - kite(128).measure) < 1e-10


def test_kite_length_self_convergence_from_128():
    assert abs(kite(128).measure - kite(256).measure) < 1e-10


def test_circle_curvature_and_normals():
    c = circle(2.0, 32)
    assert np.allclose(c.curvature, 0.5)
    assert np.allclose(c.normals, c.nodes / 2.0)
    s = sphere(2.0, 10)
    assert np.allclose(s.curvature, 0.5)
    assert np.allclose(s.normals, s.nodes / 2.0)


@pytest.mark.parametrize("make", [
    lambda: circle(1.3, 64), lambda: ellipse(1.0, 0.6, 64), lambda: kite(128),
    lambda: sphere(0.8, 12), lambda: ellipsoid(1.0, 0.8, 0.6, 16),
])
def test_weighted_normals_sum_to_zero(make):
    s = make()
    assert np.abs(s.weights @ s.normals).max() < 1e-10


@pytest.mark.parametrize("make", [lambda n: ellipse(1.0, 0.6, n), lambda n: circle(0.7, n)])
def test_refinement_changes_length_little(make):
    assert abs(make(128).measure - make(256).measure) < 1e-10


def test_ellipsoid_area_refinement():
    assert abs(ellipsoid(1.0, 0.8, 0.6, 24).measure - ellipsoid(1.0, 0.8, 0.6, 48).measure) < 1e-10


def test_resolution_limits():
    with pytest.raises(DomainError):
        circle(1.0, 8)
    with pytest.raises(DomainError):
        circle(1.0, 33)
    with pytest.raises(DomainError):
        sphere(1.0, 4)
    with pytest.raises(DomainError):
        build_surface({"kind": "torus"}, 32)


def test_self_intersection_detected():
    desc = {"kind": "trig", "cos": [[1.0, 0.0], [0.0, 0.0], [1.2, 0.0]], "sin": [[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]}
    with pytest.raises(GeometryError):
        build_surface(desc, 64)


def test_clockwise_rejected():
    with pytest.raises(GeometryError):
        build_surface({"kind": "trig", "cos": [[1.0, 0.0]], "sin": [[0.0, -1.0]]}, 32)


def test_surfaces_are_read_only():
    c = circle(1.0, 32)
    with pytest.raises(ValueError):
        c.nodes[0, 0] = 5.0


def test_offset_circle():
    g = offset_surface(circle(1.0, 64), 0.5)
    assert g.scale == pytest.approx(0.5)
    assert np.allclose(np.linalg.norm(g.nodes, axis=1), 0.5)
    assert g.measure == pytest.approx(np.pi)


def test_offset_small_R_tends_to_identity():
    c = circle(1.0, 64)
    errs = [np.abs(offset_surface(c, R).nodes - c.nodes).max() for R in (1e-2, 1e-4, 1e-6)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


def test_offset_sphere_jacobian():
    g = offset_surface(sphere(1.0, 12), 0.25)
    assert np.allclose(np.linalg.norm(g.nodes, axis=1), 0.75)
    assert np.allclose(g.jacobian, 0.75**2)
    assert g.measure == pytest.approx(4 * np.pi * 0.75**2, rel=1e-10)


def test_offset_keeps_distance():
    g = offset_surface(ellipse(1.0, 0.6, 128), 0.2)
    assert g.min_distance >= 0.2 - 1e-8


def test_offset_errors():
    with pytest.raises(DomainError):
        offset_surface(circle(1.0, 32), 1.0)
    shifted = build_surface({"kind": "trig", "center": [3.0, 0.0], "cos": [[1.0, 0.0]], "sin": [[0.0, 1.0]]}, 32)
    with pytest.raises(CapabilityError):
        offset_surface(shifted, 0.1)
    # the scaled kite comes closer than R to its own boundary
    with pytest.raises(GeometryError):
        offset_surface(kite(64), 0.1)


@given(st.floats(0.01, 0.9), st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_offset_map_roundtrip(R, x):
    g = offset_surface(circle(1.0, 32), R)
    x = np.array(x)
    assert np.allclose(g.inverse(g.map(x)), x, atol=1e-14, rtol=1e-14)


def test_constant_integrates_to_measure():
    c = circle(1.0, 64)
    assert surface_integral(c, bump()(c.nodes)) == pytest.approx(2 * np.pi)


def test_bump_half_support():
    c = circle(1.0, 128)
    b = bump(center=[1.0, 0.0], width=np.pi)
    v = surface_integral(c, b(c.nodes))
    assert 0 < v < 2 * np.pi
    vals = b(c.nodes)
    assert vals.min() >= 0 and vals.max() <= 1
    assert b(np.array([[2.0, 0.0]]))[0] == 1.0
    assert b(np.array([[np.cos(np.pi / 2 + 1e-9), np.sin(np.pi / 2 + 1e-9)]]))[0] == 0.0


def test_bump_errors():
    with pytest.raises(DomainError):
        bump(center=[1.0, 0.0], width=7.0)
    with pytest.raises(DomainError):
        bump(center=[0.0, 0.0], width=1.0)


def test_trig_polynomial_exact(rng):
    c = circle(1.0, 64)
    k = np.arange(-6, 7)
    coef = rng.normal(size=13) + 1j * rng.normal(size=13)
    f = np.exp(1j * np.outer(c.t, k)) @ coef
    assert abs(surface_integral(c, f) - 2 * np.pi * coef[6]) < 1e-13


@given(st.integers(-31, 31))
def test_trapezoid_exact_below_nyquist(n):
    c = circle(1.0, 64)
    val = surface_integral(c, np.exp(1j * n * c.t))
    assert abs(val - (2 * np.pi if n == 0 else 0)) < 1e-12


def test_bump_support_rule_circle():
    g = BumpFunction([0.3, -1.0], 1.3)
    pts, w = g.support_rule(2)
    M = 20000
    th = 2 * np.pi * np.arange(M) / M
    ring = np.column_stack([np.cos(th), np.sin(th)])
    f = lambda p: 1 + p[:, 0] ** 3
    assert np.sum(w * f(pts)) == pytest.approx(2 * np.pi / M * np.sum(g(ring) * f(ring)), rel=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 1))
def test_bump_support_rule_sphere_rotation_invariant(x, y, z):
    g0 = BumpFunction([0.0, 0.0, 1.0], 0.8)
    g = BumpFunction([x, y, z], 0.8)
    _, w0 = g0.support_rule(3)
    pts, w = g.support_rule(3)
    assert np.sum(w) == pytest.approx(np.sum(w0), rel=1e-12)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1)
    # first moment points along the center
    mom = (w[:, None] * pts).sum(0)
    assert np.allclose(mom / np.linalg.norm(mom), g.center, atol=1e-12)


def test_constant_bump_has_no_support_rule():
    with pytest.raises(DomainError):
        BumpFunction().support_rule(2)
