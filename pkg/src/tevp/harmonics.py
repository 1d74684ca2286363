"""Fourier and real spherical-harmonic bases on circles and spheres."""
import numpy as np
from scipy.special import sph_harm_y

from .exceptions import CapabilityError, DomainError


def sh_index(l, m):
    """Flat index of (l, m) in the ordering l = 0.., m = -l..l."""
    return l * l + l + m


def sh_labels(L):
    ls = np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)
    ms = np.concatenate([np.arange(-l, l + 1) for l in range(L + 1)])
    return ls, ms


def real_sph_harm(l, m, theta, phi):
    """Orthonormal real spherical harmonic; ``theta`` is the polar angle."""
    am = abs(m)
    Y = sph_harm_y(l, am, theta, phi)
    if m == 0:
        return Y.real
    sgn = (-1) ** am
    if m > 0:
        return np.sqrt(2) * sgn * Y.real
    return np.sqrt(2) * sgn * Y.imag


def sph_harm_matrix(L, theta, phi):
    """Matrix of real harmonics, shape (n_points, (L+1)^2)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    out = np.empty((theta.size, (L + 1) ** 2))
    for l in range(L + 1):
        for m in range(-l, l + 1):
            out[:, sh_index(l, m)] = real_sph_harm(l, m, theta.ravel(), phi.ravel())
    return out


def _complex_row(l, theta, phi):
    """Complex Y_l^m for m = 0..l+1 (the last column is zero)."""
    out = np.zeros((len(theta), l + 2), dtype=complex)
    for m in range(l + 1):
        out[:, m] = sph_harm_y(l, m, theta, phi)
    return out


def real_sph_harm_grad(l, m, theta, phi):
    """Angular derivatives (d/dtheta, d/dphi) of the real harmonic (l, m)."""
    am = abs(m)
    C = _complex_row(l, theta, phi)
    Y = C[:, am]
    cot = np.cos(theta) / np.sin(theta)
    coef = np.sqrt(max((l - am) * (l + am + 1), 0))
    dth = am * cot * Y + coef * np.exp(-1j * phi) * C[:, am + 1]
    dph = 1j * am * Y
    if m == 0:
        return dth.real, dph.real
    sgn = (-1) ** am * np.sqrt(2)
    if m > 0:
        return sgn * dth.real, sgn * dph.real
    return sgn * dth.imag, sgn * dph.imag


def spherical_coords(points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(points, axis=1)
    theta = np.arccos(np.clip(points[:, 2] / np.where(r > 0, r, 1), -1, 1))
    phi = np.arctan2(points[:, 1], points[:, 0]) % (2 * np.pi)
    return r, theta, phi


def to_harmonic(surface, density):
    """Harmonic coefficients of node samples.

    Circle: complex Fourier coefficients ``c_k`` in FFT order
    (``density = sum_k c_k exp(i k theta)``).  Sphere: coefficients in the
    real orthonormal basis, flat (l, m) order, via the Gauss grid.
    """
    density = np.asarray(density)
    if surface.is_circle:
        return np.fft.fft(density, axis=0) / surface.n_nodes
    if surface.is_sphere:
        Y = _surface_sh(surface)
        w = surface.weights / surface.radius**2
        return Y.T @ (w[:, None] * density if density.ndim == 2 else w * density)
    raise CapabilityError(f"no harmonic basis on {surface.kind}")


def from_harmonic(surface, coeffs):
    coeffs = np.asarray(coeffs)
    if surface.is_circle:
        return np.fft.ifft(coeffs, axis=0) * surface.n_nodes
    if surface.is_sphere:
        return _surface_sh(surface) @ coeffs
    raise CapabilityError(f"no harmonic basis on {surface.kind}")


def _surface_sh(surface):
    cache = surface.__dict__.setdefault("_cache", {})
    if "sh" not in cache:
        cache["sh"] = sph_harm_matrix(surface.resolution, surface.theta, surface.phi)
    return cache["sh"]


def circle_basis(surface, labels):
    """Orthonormal real Fourier densities on a circle at the nodes.

    ``labels`` are pairs (n, part) with part 0 for cosine and 1 for sine;
    normalization is in the weighted surface inner product.
    """
    a = surface.radius
    th = np.arctan2(surface.nodes[:, 1], surface.nodes[:, 0])
    out = np.empty((surface.n_nodes, len(labels)))
    for j, (n, part) in enumerate(labels):
        if n == 0:
            if part:
                raise DomainError("n = 0 has no sine component")
            out[:, j] = 1.0 / np.sqrt(2 * np.pi * a)
        else:
            f = np.cos if part == 0 else np.sin
            out[:, j] = f(n * th) / np.sqrt(np.pi * a)
    return out


def sphere_basis(surface, labels):
    """Orthonormal real spherical-harmonic densities on a sphere at the nodes."""
    a = surface.radius
    out = np.empty((surface.n_nodes, len(labels)))
    for j, (l, m) in enumerate(labels):
        out[:, j] = real_sph_harm(l, m, surface.theta, surface.phi) / a
    return out
