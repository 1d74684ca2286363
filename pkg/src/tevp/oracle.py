"""Closed-form ground truth on disks and balls.

Separation of variables turns the transmission problem into one scalar
determinant per angular order, and the layer operators on a circle or
sphere into multipliers.  Everything here is evaluated directly with
:mod:`scipy.special`, independently of the quadrature code.
"""
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import quad
from scipy.optimize import brentq

from .exceptions import CapabilityError, DomainError, NumericalRangeError
from ._validation import check_dimension, check_kappa_range, check_positive

FIG1_KAPPA = 5.5496


def _bessel(d):
    if d == 2:
        return special.jv, special.jvp
    return (lambda n, x: special.spherical_jn(n, x),
            lambda n, x: special.spherical_jn(n, x, derivative=True))


def radial_determinant(d, a, order, kappa, Q):
    """Transmission determinant of one angular order.

    ``kappa J'(kappa a) J(kappa Q a) - kappa Q J'(kappa Q a) J(kappa a)``
    with cylinder (d = 2) or spherical (d = 3) Bessel functions; its zeros in
    ``kappa`` are the transmission eigenvalues of that order.
    """
    d = check_dimension(d)
    J, dJ = _bessel(d)
    k = np.asarray(kappa, dtype=float)
    return k * dJ(order, k * a) * J(order, k * Q * a) - k * Q * dJ(order, k * Q * a) * J(order, k * a)


def default_order_range(kappa_max, Q, a):
    """Orders that can carry roots below ``kappa_max``.

    For orders well above ``kappa Q a`` both Bessel factors are evanescent
    and the determinant has no zeros; a margin of 10 is added.
    """
    return (0, int(np.ceil(kappa_max * max(Q, 1.0) * a)) + 10)


def radial_eigenvalues(d, a, Q, kappa_range, order_range=None, n_grid=4000, xtol=1e-12):
    """All sign-change roots of the radial determinants.

    Parameters
    ----------
    d : int
    a, Q : float
    kappa_range : (float, float)
    order_range : (int, int), optional
        Inclusive range of orders; default :func:`default_order_range`.
    n_grid : int
        Scan points per order before bisection.

    Returns
    -------
    list of (order, kappa) sorted by kappa
    """
    check_dimension(d)
    a = check_positive(a, "a")
    Q = check_positive(Q, "Q")
    lo, hi = check_kappa_range(kappa_range)
    if abs(Q - 1) < 1e-12:
        return []
    if order_range is None:
        order_range = default_order_range(hi, Q, a)
    grid = np.linspace(lo, hi, n_grid + 1)
    out = []
    for n in range(order_range[0], order_range[1] + 1):
        f = radial_determinant(d, a, n, grid, Q)
        sgn = np.sign(f)
        for i in np.flatnonzero(sgn[:-1] * sgn[1:] < 0):
            root = brentq(lambda k: radial_determinant(d, a, n, k, Q), grid[i], grid[i + 1], xtol=xtol, rtol=1e-15)
            out.append((n, float(root)))
        for i in np.flatnonzero(f == 0):
            out.append((n, float(grid[i])))
    out.sort(key=lambda p: (p[1], p[0]))
    return out


def nearest_root(roots, target=FIG1_KAPPA):
    """(distance, order, kappa) of the root closest to ``target``."""
    if not roots:
        return None
    best = min(roots, key=lambda p: abs(p[1] - target))
    return abs(best[1] - target), best[0], best[1]


@dataclass
class RadialMode:
    """Separated transmission eigenfunction on a disk (d=2) or ball (d=3).

    ``u = alpha J(kappa Q r) Y``, ``v = beta J(kappa r) Y`` with the angular
    factor ``exp(i n theta)`` (d = 2) or the real harmonic ``Y_l^m`` (d = 3).
    Amplitudes are normalized so that ``u = v = Y`` on ``r = a``.
    """

    d: int
    a: float
    order: int
    kappa: float
    Q: float
    m: int = 0

    def __post_init__(self):
        J, _ = _bessel(self.d)
        self.alpha = 1.0 / J(self.order, self.kappa * self.Q * self.a)
        self.beta = 1.0 / J(self.order, self.kappa * self.a)


def _angular(mode, pts):
    if mode.d == 2:
        th = np.arctan2(pts[:, 1], pts[:, 0])
        Y = np.exp(1j * mode.order * th)
        return Y, th, None
    from .harmonics import real_sph_harm, spherical_coords
    _, th, ph = spherical_coords(pts)
    return real_sph_harm(mode.order, mode.m, th, ph), th, ph


def radial_mode_eval(mode, points):
    """Fields and gradients of a :class:`RadialMode`.

    Returns
    -------
    u, v : ndarray, shape (m,)
    grad_u, grad_v : ndarray, shape (m, d)
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(pts, axis=1)
    if np.any(r > mode.a * (1 + 1e-12)):
        raise DomainError("radial mode evaluated outside the domain")
    J, dJ = _bessel(mode.d)
    n = mode.order
    Y, th, ph = _angular(mode, pts)
    out = []
    for amp, k in ((mode.alpha, mode.kappa * mode.Q), (mode.beta, mode.kappa)):
        f = amp * J(n, k * r)
        df = amp * k * dJ(n, k * r)
        if mode.d == 2:
            rhat = np.column_stack([np.cos(th), np.sin(th)])
            that = np.column_stack([-np.sin(th), np.cos(th)])
            with np.errstate(invalid="ignore", divide="ignore"):
                tang = np.where(r > 0, f / np.where(r > 0, r, 1), 0) * 1j * n * Y
            g = (df * Y)[:, None] * rhat + tang[:, None] * that
        else:
            from .harmonics import real_sph_harm_grad
            gt, gp = real_sph_harm_grad(n, mode.m, th, ph)
            st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
            rhat = np.column_stack([st * cp, st * sp, ct])
            that = np.column_stack([ct * cp, ct * sp, -st])
            phat = np.column_stack([-sp, cp, np.zeros_like(sp)])
            g = (df * Y)[:, None] * rhat + (f / r * gt)[:, None] * that + (f / (r * st) * gp)[:, None] * phat
        out.append((f * Y, g))
    return out[0][0], out[1][0], out[0][1], out[1][1]


def normal_derivative_mismatch(mode):
    """|d_r u - d_r v| at r = a for the angular factor 1 (zero at eigenvalues)."""
    J, dJ = _bessel(mode.d)
    n, a = mode.order, mode.a
    du = mode.alpha * mode.kappa * mode.Q * dJ(n, mode.kappa * mode.Q * a)
    dv = mode.beta * mode.kappa * dJ(n, mode.kappa * a)
    return abs(du - dv)


def disk_energy(mode, radius, which="u"):
    """Closed-form  int_0^radius |f(r)|^2 r dr  of the 2-D radial factor (Lommel)."""
    if mode.d != 2:
        raise CapabilityError("disk_energy is 2-D")
    amp, k = (mode.alpha, mode.kappa * mode.Q) if which == "u" else (mode.beta, mode.kappa)
    n, z = mode.order, k * radius
    if z == 0:
        return 0.0
    val = 0.5 * radius**2 * (special.jvp(n, z) ** 2 + (1 - n**2 / z**2) * special.jv(n, z) ** 2)
    return float(abs(amp) ** 2 * val)


def collar_fraction(mode, width, which="u"):
    """Fraction of ``int_D |zeta|^2`` within ``width`` of the boundary (disk)."""
    a = mode.a
    if width <= 0:
        return 0.0
    if width >= a:
        return 1.0
    total = disk_energy(mode, a, which)
    return 1.0 - disk_energy(mode, a - width, which) / total


def collar_fraction_quadrature(mode, width, which="u"):
    """Same as :func:`collar_fraction` by adaptive quadrature (second route)."""
    amp, k = (mode.alpha, mode.kappa * mode.Q) if which == "u" else (mode.beta, mode.kappa)
    n, a = mode.order, mode.a

    def f(r):
        return abs(amp) ** 2 * special.jv(n, k * r) ** 2 * r

    opts = dict(epsabs=0, epsrel=1e-13, limit=500)
    total = quad(f, 0, a, **opts)[0]
    inner = quad(f, 0, a - width, **opts)[0] if width < a else 0.0
    return 1.0 - inner / total


def exact_operator_spectrum(surface, kappa, max_order):
    """Exact multipliers of S and K* on a circle or sphere.

    Returns
    -------
    dict with complex arrays ``S``, ``Kstar``, ``interior``, ``exterior``
    indexed by order 0..max_order; ``interior`` / ``exterior`` are the
    normal derivatives of the single layer from each side
    (``interior - exterior = 1``).
    """
    kappa = check_positive(kappa, "kappa")
    a = surface.radius
    z = kappa * a
    n = np.arange(max_order + 1)
    if surface.dim == 2:
        J, dJ = special.jv(n, z), special.jvp(n, z)
        H, dH = special.hankel1(n, z), special.h1vp(n, z)
        S = 0.5j * np.pi * a * J * H
        inner = 0.5j * np.pi * z * dJ * H
        outer = 0.5j * np.pi * z * J * dH
    else:
        j = special.spherical_jn(n, z)
        dj = special.spherical_jn(n, z, derivative=True)
        h = j + 1j * special.spherical_yn(n, z)
        dh = dj + 1j * special.spherical_yn(n, z, derivative=True)
        S = 1j * kappa * a * a * j * h
        inner = 1j * kappa * z * a * dj * h
        outer = 1j * kappa * z * a * j * dh
    with np.errstate(all="ignore"):
        bad = ~np.isfinite(S * inner * outer) | (np.abs(S) == 0)
    bad |= np.abs(J if surface.dim == 2 else j) < 1e-290
    if np.any(bad):
        first = int(n[bad][0])
        raise NumericalRangeError(
            f"Bessel products at z={z:.6g} are not representable from order {first}; lower max_order")
    return {"S": S, "Kstar": 0.5 * (inner + outer), "interior": inner, "exterior": outer}


def disk_scattering_coefficients(a, Q, kappa, nmax):
    """Partial-wave transmission solution for the disk.

    For incident ``J_n(kappa r) e^{i n theta}`` the scattered field is
    ``A_n H_n(kappa r) e^{i n theta}`` outside and the total interior field
    ``C_n J_n(kappa Q r) e^{i n theta}``.

    Returns
    -------
    n, A, C : ndarrays over ``n = -nmax..nmax``
    """
    n = np.arange(-nmax, nmax + 1)
    z, zq = kappa * a, kappa * Q * a
    J, dJ = special.jv(n, z), special.jvp(n, z)
    H, dH = special.hankel1(n, z), special.h1vp(n, z)
    Jq, dJq = special.jv(n, zq), special.jvp(n, zq)
    den = Jq * dH - Q * dJq * H
    A = (Q * dJq * J - Jq * dJ) / den
    C = (J + A * H) / Jq
    return n, A, C


def disk_far_field(a, Q, kappa, coeffs, directions, nmax=None):
    """Far-field pattern on the disk for incident sum_n c_n J_n(kr) e^{in theta}.

    Uses ``H_n(kr) ~ sqrt(2/(pi k r)) exp(i(kr - n pi/2 - pi/4))``, with the
    convention ``scattered ~ exp(i k r) r^{-1/2} * far field``.
    """
    coeffs = np.asarray(coeffs)
    nmax = (len(coeffs) - 1) // 2 if nmax is None else nmax
    n, A, _ = disk_scattering_coefficients(a, Q, kappa, nmax)
    th = np.asarray(directions, dtype=float)
    phase = np.exp(1j * np.outer(th, n)) * (-1j) ** n
    return np.sqrt(2 / (np.pi * kappa)) * np.exp(-0.25j * np.pi) * (phase @ (coeffs * A))


def plane_wave_coefficients(kappa, angle, nmax):
    """Jacobi-Anger coefficients of exp(i kappa x.d) with d at ``angle``."""
    n = np.arange(-nmax, nmax + 1)
    return (1j) ** n * np.exp(-1j * n * angle)
