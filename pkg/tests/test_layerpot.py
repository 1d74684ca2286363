import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special
from scipy.integrate import quad

from tevp.exceptions import CapabilityError, NearSingularError, ProximityError
from tevp.geometry import circle, ellipse, kite, sphere
from tevp import harmonics
from tevp.layerpot import (
    assemble_kstar, assemble_pair, assemble_single, circulant_symbols, eval_potential, solve_single,
)
from tevp.oracle import exact_operator_spectrum

from _jump import jump_residuals, observed_order


def _mode(c, n):
    return np.exp(1j * n * c.t)


def test_single_layer_is_equivariant_on_circle():
    c = circle(1.0, 256)
    S = assemble_single(c, 3.0, "dense")
    for n in (0, 1, 5, 17):
        e = _mode(c, n)
        out = S.apply(e)
        lam = np.vdot(e, out) / np.vdot(e, e)
        assert np.abs(out - lam * e).max() < 1e-9


def test_single_layer_eigenvalue_closed_form():
    c = circle(1.0, 512)
    S = assemble_single(c, 2.0, "dense")
    e = _mode(c, 3)
    lam = np.vdot(e, S.apply(e)) / len(e)
    ref = 0.5j * np.pi * special.jv(3, 2.0) * special.hankel1(3, 2.0)
    assert abs(lam - ref) < 1e-8


def test_single_layer_closed_form_cross_checked_by_quadrature():
    # S[e^{3i theta}] at theta=0 by adaptive quadrature of the log-singular kernel
    k, n = 2.0, 3
    f = lambda s, part: getattr(0.25j * special.hankel1(0, k * 2 * abs(np.sin(s / 2))) * np.exp(1j * n * s), part)
    val = sum(quad(lambda s: f(s, p), 0, 2 * np.pi, points=[np.pi], limit=400, epsabs=1e-13)[0] * w
              for p, w in (("real", 1), ("imag", 1j)))
    ref = 0.5j * np.pi * special.jv(n, k) * special.hankel1(n, k)
    assert abs(val - ref) < 1e-8


def test_sphere_l0_single_layer_matches_brute_force():
    s = sphere(1.0, 12)
    S = assemble_single(s, 1.0)
    # S[1] at the north pole; |x-y| = 2 sin(theta/2)
    g = lambda th: np.exp(1j * 2 * np.sin(th / 2)) / (4 * np.pi * 2 * np.sin(th / 2)) * 2 * np.pi * np.sin(th)
    val = quad(lambda t: g(t).real, 0, np.pi)[0] + 1j * quad(lambda t: g(t).imag, 0, np.pi)[0]
    h0 = special.spherical_jn(0, 1.0) + 1j * special.spherical_yn(0, 1.0)
    closed = 1j * special.spherical_jn(0, 1.0) * h0
    assert S.diagonal[0] == pytest.approx(closed, rel=1e-12)
    assert val == pytest.approx(closed, rel=1e-10)


def test_laplace_limit_circle_kstar():
    _, k = circulant_symbols(circle(1.0, 64), 1e-4)
    # G = +(i/4)H0 makes the constant eigenvalue -1/2 (the +1/2 of the
    # opposite sign convention)
    assert -k[0].real == pytest.approx(0.5, abs=1e-6)
    assert np.abs(k[1:]).max() < 1e-6


def test_laplace_limit_sphere_kstar():
    K = assemble_kstar(sphere(1.0, 12), 1e-3)
    l = np.arange(13)
    assert np.allclose(-K.diagonal.real, 1 / (2 * (2 * l + 1)), atol=1e-5)


@pytest.mark.slow
@pytest.mark.parametrize("name,make", [("circle", lambda n: circle(1.0, n)), ("kite", lambda n: kite(n))])
def test_jump_relation_converges(name, make):
    res = jump_residuals(make)
    assert res["reference_jump_defect"] < 1e-10
    for side in ("interior", "exterior"):
        assert res[side][-1] <= 1e-6
        assert observed_order(res[side]) >= 6


def test_kstar_eigenvalues_decay():
    k = exact_operator_spectrum(circle(1.0, 32), 5.0, 150)["Kstar"]
    assert np.abs(k[100:]).max() < 1e-3 * np.abs(k[:10]).max()
    assert np.all(np.diff(np.abs(k[20:])) < 0)
    # on the sphere the tail follows the Laplace value 1/(2(2l+1))
    K = assemble_kstar(sphere(1.0, 80), 5.0)
    l = np.arange(40, 81)
    assert np.allclose(np.abs(K.diagonal[40:]) * 2 * (2 * l + 1), 1.0, atol=0.05)


def test_dense_and_harmonic_agree_on_circle():
    c = circle(1.0, 128)
    for op in (0, 1):
        D = assemble_pair(c, 4.0, "dense")[op]
        H = assemble_pair(c, 4.0, "harmonic")[op]
        for n in (0, 2, 9, 30):
            e = _mode(c, n)
            assert np.abs(D.apply(e) - H.apply(e)).max() <= 1e-8 * np.abs(H.apply(e)).max()


def test_circle_oracle_agreement_dense_512():
    c = circle(1.0, 512)
    ex = exact_operator_spectrum(c, 6.0, 20)
    s, k = circulant_symbols(c, 6.0)
    assert np.abs(s[:21] - ex["S"]).max() < 1e-8
    assert np.abs(k[:21] - ex["Kstar"]).max() < 1e-8


def test_single_layer_dense_is_complex_symmetric():
    e = ellipse(1.0, 0.6, 96)
    S = assemble_single(e, 3.0, "dense").matrix
    Wh = np.sqrt(e.weights)
    M = (S / e.weights[None, :]) * Wh[:, None] * Wh[None, :]
    assert np.abs(M - M.T).max() <= 1e-12 * np.abs(M).max()


@given(st.integers(1, 63))
def test_rotation_commutes_on_circle(shift):
    c = circle(1.0, 64)
    S, K = assemble_pair(c, 2.5, "dense")
    P = np.roll(np.eye(64), shift, axis=0)
    for op in (S.matrix, K.matrix):
        assert np.abs(P @ op - op @ P).max() < 1e-9


def test_sphere_rotation_about_axis():
    s = sphere(1.0, 10)
    S = assemble_single(s, 2.0)
    rng = np.random.default_rng(0)
    coeffs = rng.normal(size=121)
    dens = harmonics.from_harmonic(s, coeffs)
    out = S.apply(dens).reshape(s.n_theta, s.n_phi)
    rolled = S.apply(np.roll(dens.reshape(s.n_theta, s.n_phi), 3, axis=1).ravel()).reshape(s.n_theta, s.n_phi)
    assert np.abs(np.roll(out, 3, axis=1) - rolled).max() < 1e-9


def test_zero_density_potential():
    c = circle(1.0, 64)
    pts = np.array([[0.2, 0.1], [2.0, 0.0]])
    assert np.all(eval_potential(c, np.zeros(64), pts, 3.0) == 0)


def test_interior_potential_addition_theorem():
    c = circle(1.0, 256)
    k = 4.0
    for n in (0, 3, 8):
        for r in (0.3, 0.8):
            th = np.linspace(0, 2 * np.pi, 7)
            pts = r * np.column_stack([np.cos(th), np.sin(th)])
            val = eval_potential(c, _mode(c, n), pts, k)
            ref = 0.5j * np.pi * special.jv(n, k * r) * special.hankel1(n, k) * np.exp(1j * n * th)
            assert np.abs(val - ref).max() < 1e-8


def test_potential_satisfies_helmholtz(rng):
    e = ellipse(1.0, 0.7, 128)
    k, h = 3.0, 1e-3
    dens = rng.normal(size=128) + 1j * rng.normal(size=128)
    pts = np.array([[0.1, 0.2], [-0.3, 0.0], [0.2, -0.25]])
    u = lambda p: eval_potential(e, dens, p, k)
    lap = sum(u(pts + h * d) + u(pts - h * d) for d in (np.array([1, 0]), np.array([0, 1]))) - 4 * u(pts)
    res = lap / h**2 + k**2 * u(pts)
    assert np.abs(res).max() <= 1e-5 * np.abs(k**2 * u(pts)).max()


def test_gradient_matches_finite_difference(rng):
    e = ellipse(1.0, 0.7, 128)
    dens = rng.normal(size=128)
    p = np.array([[0.2, 0.1], [1.6, -0.4]])
    g = eval_potential(e, dens, p, 2.0, mode="gradient")
    h = 1e-6
    for j in range(2):
        d = np.zeros(2)
        d[j] = h
        fd = (eval_potential(e, dens, p + d, 2.0) - eval_potential(e, dens, p - d, 2.0)) / (2 * h)
        assert np.allclose(g[:, j], fd, rtol=1e-6, atol=1e-9)


def test_sphere_offsurface_mode_decay():
    s = sphere(1.0, 40)
    k, R = 8.0, 0.5
    pt = np.array([[0.0, 0.0, 1.0 - R]])
    vals = []
    for l in range(0, 41):
        c = np.zeros((41) ** 2)
        c[l * l + l] = 1.0
        vals.append(abs(eval_potential(s, c, pt, k, harmonic=True)[0]))
    tail = np.array(vals[12:])
    assert np.all(np.diff(tail) < 0)


def test_proximity_error():
    c = circle(1.0, 64)
    with pytest.raises(ProximityError):
        eval_potential(c, np.ones(64), [[1.001, 0.0]], 2.0)
    s = sphere(1.0, 8)
    with pytest.raises(ProximityError):
        eval_potential(s, np.ones(s.n_nodes), [[0.0, 0.0, 1.0]], 2.0)


def test_dense_on_sphere_is_a_capability_error():
    with pytest.raises(CapabilityError):
        assemble_single(sphere(1.0, 8), 1.0, "dense")
    with pytest.raises(CapabilityError):
        assemble_single(kite(64), 1.0, "harmonic")


def test_solve_single_round_trip(rng):
    e = ellipse(1.0, 0.6, 96)
    S = assemble_single(e, 2.0, "dense")
    phi = rng.normal(size=96) + 1j * rng.normal(size=96)
    x = solve_single(S, S.apply(phi))
    assert np.abs(x - phi).max() < 1e-9


def test_solve_single_near_dirichlet_eigenvalue():
    j = special.jn_zeros(2, 1)[0]
    c = circle(1.0, 64)
    far = assemble_single(c, j + 0.3, "dense").cond()
    S = assemble_single(c, j, "harmonic", nmax=32)
    assert S.cond() > 1e12 or not np.isfinite(S.cond())
    assert assemble_single(c, j + 1e-9, "dense").cond() > 1e6 * far
    with pytest.raises(NearSingularError) as info:
        solve_single(S, np.ones(64))
    assert info.value.kappa == pytest.approx(j)


def test_harmonic_division_matches_dense(rng):
    c = circle(1.0, 128)
    rhs = np.fft.ifft(np.where(np.abs(np.fft.fftfreq(128, 1 / 128)) < 20, rng.normal(size=128), 0))
    a = solve_single(assemble_single(c, 3.3, "dense"), rhs)
    b = solve_single(assemble_single(c, 3.3, "harmonic"), rhs)
    assert np.abs(a - b).max() <= 1e-8 * np.abs(b).max()


def test_upsampled_evaluation_near_boundary():
    # S^k[cos 3t] on the unit circle is s_3 J_3(k r)/J_3(k) cos 3 theta inside
    c = circle(1.0, 64)
    k = 2.0
    phi = np.cos(3 * c.t)
    x = np.array([[0.93 * np.cos(0.4), 0.93 * np.sin(0.4)]])
    s3 = exact_operator_spectrum(c, k, 3)["S"][3]
    ref = s3 * special.jv(3, k * 0.93) / special.jv(3, k) * np.cos(1.2)
    with pytest.raises(ProximityError):
        eval_potential(c, phi, x, k)
    plain = eval_potential(c, phi, x, k, r_min=0.0)[0]
    fine = eval_potential(c, phi, x, k, upsample=8)[0]
    assert abs(fine - ref) < 1e-12
    assert abs(plain - ref) > 1e3 * abs(fine - ref)
