"""Cylinder and spherical wave functions and the Helmholtz fundamental solution.

Values come from the AMOS-based routines in :mod:`scipy.special`.  For
products such as J_nu(z) H_nu(z) at orders far above the argument, where
Y_nu overflows and J_nu underflows, the ratio tables in :func:`jh_table`
evaluate the product from continued-fraction ratios and the Wronskian.
"""
import numpy as np
from scipy import special

from .exceptions import CapabilityError, DomainError, NumericalRangeError, SingularityError
from ._validation import check_dimension, check_wavenumber

KINDS = ("BesselJ", "BesselY", "Hankel1", "SphericalJ", "SphericalY", "SphericalH1")
MAX_ORDER = 200


def _finite_or_raise(arr, what):
    arr = np.asarray(arr)
    if not np.all(np.isfinite(arr)):
        raise NumericalRangeError(f"non-finite value while evaluating {what}")
    return arr


def wave(kind, order, x):
    """Vectorized value and derivative of a cylinder/spherical wave.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    order : int or array_like
        Nonnegative order (broadcast against ``x``).
    x : array_like
        Positive arguments.

    Returns
    -------
    value, derivative : ndarray
    """
    x = np.asarray(x, dtype=float)
    order = np.asarray(order)
    if kind == "BesselJ":
        return special.jv(order, x), special.jvp(order, x)
    if kind == "BesselY":
        return special.yv(order, x), special.yvp(order, x)
    if kind == "Hankel1":
        return special.hankel1(order, x), special.h1vp(order, x)
    if kind == "SphericalJ":
        return special.spherical_jn(order, x), special.spherical_jn(order, x, derivative=True)
    if kind == "SphericalY":
        return special.spherical_yn(order, x), special.spherical_yn(order, x, derivative=True)
    if kind == "SphericalH1":
        j = special.spherical_jn(order, x)
        y = special.spherical_yn(order, x)
        dj = special.spherical_jn(order, x, derivative=True)
        dy = special.spherical_yn(order, x, derivative=True)
        return j + 1j * y, dj + 1j * dy
    raise DomainError(f"unknown wave kind {kind!r}; expected one of {KINDS}")


def eval_wave(kind, order, x, max_order=MAX_ORDER):
    """Evaluate one wave function and its first derivative.

    Parameters
    ----------
    kind : str
        ``"BesselJ"``, ``"BesselY"``, ``"Hankel1"``, ``"SphericalJ"``,
        ``"SphericalY"`` or ``"SphericalH1"``.
    order : int
        Order, ``0 <= order <= max_order``.
    x : float
        Positive argument.

    Returns
    -------
    (value, derivative) : tuple of complex
    """
    if kind not in KINDS:
        raise DomainError(f"unknown wave kind {kind!r}")
    if int(order) != order or order < 0:
        raise DomainError(f"order must be a nonnegative integer, got {order!r}")
    if order > max_order:
        raise CapabilityError(f"order {order} exceeds configured maximum {max_order}")
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise DomainError(f"argument must be positive, got {x}")
    val, der = wave(kind, int(order), x)
    _finite_or_raise([val, der], f"{kind}({order}, {x})")
    return complex(val), complex(der)


def green(d, kappa, r):
    """Outgoing fundamental solution G_kappa at separation ``r``.

    ``G = (i/4) H0(kappa r)`` in 2-D and ``exp(i kappa r)/(4 pi r)`` in 3-D,
    so that ``(Delta + kappa^2) G = -delta``.
    """
    d = check_dimension(d)
    kappa = check_wavenumber(kappa)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularityError("green evaluated at zero separation")
    if d == 2:
        out = 0.25j * special.hankel1(0, kappa * r)
    else:
        out = np.exp(1j * kappa * r) / (4 * np.pi * r)
    out = _finite_or_raise(out, "green")
    return complex(out) if out.ndim == 0 else out


def green_hankel_form(d, kappa, r):
    """Dimension-generic Hankel form of the fundamental solution.

    ``G = (i/4) (kappa / (2 pi r))^((d-2)/2) H^(1)_{(d-2)/2}(kappa r)``.
    """
    d = check_dimension(d)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularityError("green evaluated at zero separation")
    nu = (d - 2) / 2
    out = 0.25j * (kappa / (2 * np.pi * r)) ** nu * special.hankel1(nu, kappa * r)
    return complex(out) if out.ndim == 0 else out


def green_radial_derivative(d, kappa, r):
    """dG/dr as an array; helper for gradients and normal derivatives."""
    r = np.asarray(r, dtype=float)
    if d == 2:
        return -0.25j * kappa * special.hankel1(1, kappa * r)
    return np.exp(1j * kappa * r) * (1j * kappa * r - 1) / (4 * np.pi * r**2)


def green_grad(d, kappa, displacement):
    """Gradient of G_kappa(x - y) with respect to x.

    Parameters
    ----------
    d : int
        Dimension, 2 or 3.
    kappa : float
        Wavenumber.
    displacement : array_like, shape (..., d)
        ``x - y``.

    Returns
    -------
    ndarray of complex, same shape as ``displacement``
    """
    d = check_dimension(d)
    kappa = check_wavenumber(kappa)
    disp = np.asarray(displacement, dtype=float)
    if disp.shape[-1] != d:
        raise DomainError(f"displacement must have trailing dimension {d}")
    r = np.linalg.norm(disp, axis=-1)
    if np.any(r == 0):
        raise SingularityError("green_grad evaluated at zero displacement")
    dg = green_radial_derivative(d, kappa, r)
    out = (dg / r)[..., None] * disp
    return _finite_or_raise(out, "green_grad")


# ---------------------------------------------------------------------------
# order tables for harmonic-diagonal operators

def _ratio_j_down(nu, z, top):
    """rho_k = J_{nu_k + 1}(z) / J_{nu_k}(z) by backward recurrence from ``top``."""
    nu0 = nu[0]
    kmax = len(nu) - 1
    ktop = max(int(top - nu0), kmax + 1)
    rho = 0.5 * z / (nu0 + ktop + 1.0)
    out = np.empty(kmax + 1)
    for k in range(ktop, -1, -1):
        # rho_{k-1} = 1 / (2 nu_k / z - rho_k)
        if k <= kmax:
            out[k] = rho
        rho = 1.0 / (2.0 * (nu0 + k) / z - rho)
    return out


def _ratio_y_up(nu, z):
    """sigma_k = Y_{nu_k + 1}(z) / Y_{nu_k}(z) by forward recurrence."""
    out = np.empty(len(nu))
    s = special.yv(nu[0] + 1, z) / special.yv(nu[0], z)
    out[0] = s
    for k in range(1, len(nu)):
        s = 2.0 * nu[k] / z - 1.0 / s
        out[k] = s
    return out


def jh_table(nu0, nmax, z):
    """Bessel products needed by harmonic-diagonal layer operators.

    Orders are ``nu = nu0 + k`` for ``k = 0..nmax`` (``nu0`` is 0 for the
    circle and 1/2 for the sphere).

    Returns
    -------
    dict with arrays
        ``"JH"``: J_nu(z) H^(1)_nu(z);  ``"gJ"``: J'_nu/J_nu;
        ``"gH"``: H'_nu/H_nu.
    """
    z = float(z)
    if z <= 0:
        raise DomainError("argument must be positive")
    nu = nu0 + np.arange(nmax + 1, dtype=float)
    with np.errstate(all="ignore"):
        J = special.jv(nu, z)
        Y = special.yv(nu, z)
        dJ = special.jvp(nu, z)
        dY = special.yvp(nu, z)
        JH = J * (J + 1j * Y)
        gJ = dJ / J
        gH = (dJ + 1j * dY) / (J + 1j * Y)
    safe = np.isfinite(Y) & np.isfinite(dY) & (np.abs(Y) < 1e150) & (np.abs(J) > 1e-150)
    safe &= np.isfinite(JH) & np.isfinite(gJ) & np.isfinite(gH)
    if not np.all(safe):
        bad = np.flatnonzero(~safe)
        k0 = bad[0]
        if k0 == 0 or not np.all(~safe[k0:]):
            raise NumericalRangeError(f"cannot tabulate Bessel products at z={z}, nu0={nu0}")
        top = nu[-1] + 60 + 3 * np.sqrt(nu[-1] + z) + z
        rho = _ratio_j_down(nu, z, top)
        sigma = _ratio_y_up(nu, z)
        P = 2.0 / (np.pi * z * (rho - sigma))
        # log(J/Y), continued from the last safe order
        logq = np.log(abs(J[k0 - 1] / Y[k0 - 1]))
        sgn = np.sign(J[k0 - 1] / Y[k0 - 1])
        for k in range(k0, nmax + 1):
            step = rho[k - 1] / sigma[k - 1]
            logq += np.log(abs(step))
            sgn *= np.sign(step)
            q = sgn * np.exp(logq) if logq > -700 else 0.0
            JH[k] = P[k] * q + 1j * P[k]
            gJ[k] = nu[k] / z - rho[k]
            Hratio = (rho[k] * q + 1j * sigma[k]) / (q + 1j)
            gH[k] = nu[k] / z - Hratio
    for name, arr in (("JH", JH), ("gJ", gJ), ("gH", gH)):
        _finite_or_raise(arr, f"jh_table {name}")
    return {"nu": nu, "JH": JH, "gJ": gJ, "gH": gH}
