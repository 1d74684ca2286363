"""Regenerate the frozen reference values in ``frozen.json``.

Every value here comes from mpmath at 40 digits through a route that does
not touch scipy.special: a Taylor-series root, the Hankel asymptotic
series, and a high-order ODE shooting solve for the radial transmission
determinant.  Run ``python tests/oracles/generate.py`` to refresh.
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40


def j0_series(x, terms=80):
    x = mp.mpf(x)
    return mp.fsum((-1) ** k * (x / 2) ** (2 * k) / mp.factorial(k) ** 2 for k in range(terms))


def hankel_asymptotic(nu, x, terms=30):
    """Large-argument expansion of H^(1)_nu, summed up to the smallest term."""
    x = mp.mpf(x)
    mu = 4 * mp.mpf(nu) ** 2
    s, a, best = mp.mpc(1), mp.mpc(1), None
    for k in range(1, terms):
        a = a * (mu - (2 * k - 1) ** 2) / (k * 8 * x) * 1j
        if best is not None and abs(a) > best:
            break
        best = abs(a)
        s += a
    return mp.sqrt(2 / (mp.pi * x)) * mp.exp(1j * (x - nu * mp.pi / 2 - mp.pi / 4)) * s


def shoot(order, k, a, r0=mp.mpf("0.05")):
    """Value and r-derivative at ``a`` of the regular solution of
    ``w'' + w'/r + (k^2 - n^2/r^2) w = 0`` normalized like J_n(k r)."""
    n = order
    k = mp.mpf(k)

    def series(r, deriv=False):
        tot = mp.mpf(0)
        for m in range(60):
            c = (-1) ** m / (mp.factorial(m) * mp.factorial(m + n)) * (k / 2) ** (2 * m + n)
            p = 2 * m + n
            tot += c * (p * r ** (p - 1) if deriv else r ** p)
        return tot

    y0 = [series(r0), series(r0, True)]
    f = mp.odefun(lambda r, y: [y[1], -y[1] / r - (k**2 - n**2 / r**2) * y[0]], r0, y0)
    w, dw = f(mp.mpf(a))
    return w, dw


def main():
    out = {}
    root = mp.findroot(j0_series, mp.mpf("2.4"))
    out["j0_first_root"] = float(root)
    h = hankel_asymptotic(0, 100)
    out["hankel1_0_at_100"] = [float(h.real), float(h.imag)]
    k, Q, a, n = 1, 2, 1, 0
    uQ, duQ = shoot(n, k * Q, a)
    v, dv = shoot(n, k, a)
    # k J'(k a) J(k Q a) - k Q J'(k Q a) J(k a), derivatives taken in r
    det = dv * uQ - duQ * v
    out["determinant_n0_k1_Q2_a1"] = float(det)
    path = Path(__file__).with_name("frozen.json")
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
