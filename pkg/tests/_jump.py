"""Independent off-surface reference for single-layer normal derivatives.

The limit of d/dnu S[phi](x0 +- h nu) as h -> 0 is computed by Chebyshev
extrapolation in h from targets at distances 2e-4..2e-3.  Each off-surface
value is a graded composite Gauss-Legendre quadrature in the curve
parameter, refined dyadically towards the foot point, so it stays accurate
for targets much closer than any Nystrom node spacing.  No part of this
shares code with the Nystrom matrices under test.
"""
import numpy as np
from scipy.special import hankel1, roots_legendre

_XG, _WG = roots_legendre(20)


def smooth_density(seed=7, nmax=40, decay=0.35):
    rng = np.random.default_rng(seed)
    n = np.arange(-nmax, nmax + 1)
    coef = np.exp(-decay * np.abs(n)) * np.exp(2j * np.pi * rng.random(len(n)))
    return lambda t: np.exp(1j * np.outer(np.atleast_1d(t), n)) @ coef


def _graded_rule(hmin):
    edges = list(np.linspace(np.pi, 0.1, 32))
    w = 0.1
    while w > hmin:
        w /= 2
        edges.append(w)
    edges = np.array(edges + [0.0])[::-1]
    a, b = edges[:-1], edges[1:]
    t = (0.5 * (b - a)[:, None] * (_XG + 1) + a[:, None]).ravel()
    w = (0.5 * (b - a)[:, None] * _WG).ravel()
    return np.concatenate([t, -t]), np.concatenate([w, w])


def off_surface_dn(surface, phi, kappa, t0, h, side):
    """d/dnu(x0) of S[phi] at x0 + side*h*nu(x0), side=+1 outside."""
    x0, dx0, _ = surface.parametrize(np.array([t0]))
    nu = np.array([dx0[0, 1], -dx0[0, 0]]) / np.hypot(*dx0[0])
    p = x0[0] + side * h * nu
    s, w = _graded_rule(h / 10)
    t = t0 + s
    y, dy, _ = surface.parametrize(t)
    d = p - y
    r = np.hypot(d[:, 0], d[:, 1])
    kern = -0.25j * kappa * hankel1(1, kappa * r) / r * (d @ nu)
    return np.sum(kern * w * np.hypot(dy[:, 0], dy[:, 1]) * phi(t))


def limit_dn(surface, phi, kappa, ts, side, lo=2e-4, hi=2e-3, deg=5, nh=10):
    x = np.cos(np.pi * (np.arange(nh) + 0.5) / nh)
    hs = lo + (hi - lo) * (x + 1) / 2
    V = np.polynomial.chebyshev.chebvander((2 * hs - lo - hi) / (hi - lo), deg)
    e0 = np.polynomial.chebyshev.chebvander(np.array([(-lo - hi) / (hi - lo)]), deg)[0]
    vals = np.array([[off_surface_dn(surface, phi, kappa, t, h, side) for t in ts] for h in hs])
    return e0 @ np.linalg.lstsq(V, vals, rcond=None)[0]


def jump_residuals(make, kappa=5.0, Ns=(64, 128, 256), seed=7):
    """Relative max residual of (+-1/2 + K*)phi against the reference.

    Residuals are measured at the nodes shared by every grid (those of the
    coarsest).  Returns ``{"interior": [...], "exterior": [...]}``.
    """
    from tevp.layerpot import assemble_kstar

    phi = smooth_density(seed)
    base = make(Ns[0])
    ref = {"interior": limit_dn(base, phi, kappa, base.t, -1),
           "exterior": limit_dn(base, phi, kappa, base.t, +1)}
    out = {"interior": [], "exterior": []}
    for N in Ns:
        s = make(N)
        K = assemble_kstar(s, kappa, "dense")
        f = phi(s.t)
        step = N // Ns[0]
        kf, ff = (K.matrix @ f)[::step], f[::step]
        for side, sgn in (("interior", 0.5), ("exterior", -0.5)):
            pred = sgn * ff + kf
            out[side].append(float(np.abs(pred - ref[side]).max() / np.abs(ref[side]).max()))
    out["reference_jump_defect"] = float(np.abs(ref["interior"] - ref["exterior"] - phi(base.t)).max())
    return out


def observed_order(residuals, Ns=(64, 128, 256)):
    return float(np.log(residuals[0] / residuals[-1]) / np.log(Ns[-1] / Ns[0]))
