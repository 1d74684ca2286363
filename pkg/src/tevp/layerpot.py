"""Single-layer and Neumann-Poincare operators on boundaries.

Curves are discretized with the periodic log-splitting (Kress) quadrature;
spheres use the exact diagonalization in spherical harmonics.  Sign
convention: ``G = (i/4) H0`` in 2-D and ``exp(i k r)/(4 pi r)`` in 3-D, so
``(Delta + k^2) G = -delta`` and the normal derivative of ``S[phi]`` from
inside (outside) the domain is ``(+1/2 + K*)[phi]`` (``(-1/2 + K*)[phi]``).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

from . import harmonics
from .exceptions import CapabilityError, DomainError, NearSingularError, ProximityError
from .specfun import green_radial_derivative, jh_table
from ._validation import check_wavenumber

EULER_GAMMA = 0.57721566490153286061
COND_THRESHOLD = 1e12


@dataclass(eq=False)
class BoundaryOperator:
    """Discretized boundary operator.

    Parameters
    ----------
    kind : str
        ``"S"``, ``"Kstar"`` or a derived kind (``"T"``, ``"L"``, ``"B"``, ``"A"``...).
    wavenumber : float or None
    surface : BoundarySurface
    representation : {"dense", "harmonic"}
    matrix : ndarray, optional
        Dense ``(N, N)`` matrix acting on node samples, weights folded in.
    diagonal : ndarray, optional
        Eigenvalue per Fourier order ``|n|`` (circle) or degree ``l`` (sphere).
    """

    kind: str
    wavenumber: object
    surface: object
    representation: str
    matrix: np.ndarray = None
    diagonal: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for a in (self.matrix, self.diagonal):
            if a is not None:
                a.setflags(write=False)

    @property
    def is_dense(self):
        return self.representation == "dense"

    def _diag_for_surface(self):
        """Diagonal values restricted to the orders resolved by the surface grid."""
        s = self.surface
        if s.is_circle:
            nmax = s.n_nodes // 2
        else:
            nmax = s.resolution
        if len(self.diagonal) <= nmax:
            raise CapabilityError("harmonic operator truncated below the surface resolution")
        return self.diagonal[: nmax + 1]

    def apply(self, density):
        """Apply to node samples (1-D or column-stacked 2-D)."""
        density = np.asarray(density)
        if self.is_dense:
            return self.matrix @ density
        s = self.surface
        c = harmonics.to_harmonic(s, density)
        if s.is_circle:
            k = np.abs(np.fft.fftfreq(s.n_nodes, 1.0 / s.n_nodes)).astype(int)
            mult = self.diagonal[k]
        else:
            ls, _ = harmonics.sh_labels(s.resolution)
            mult = self.diagonal[ls]
        c = c * (mult[:, None] if c.ndim == 2 else mult)
        return harmonics.from_harmonic(s, c)

    def to_dense(self):
        """Dense node matrix of this operator (harmonic operators are synthesized)."""
        if self.is_dense:
            return np.array(self.matrix)
        eye = np.eye(self.surface.n_nodes)
        return self.apply(eye)

    def cond(self):
        """2-norm condition number estimate (cached)."""
        if "cond" not in self.meta:
            if self.is_dense:
                sv = np.linalg.svd(self.matrix, compute_uv=False)
                self.meta["cond"] = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
            else:
                d = np.abs(self._diag_for_surface()) if self.surface is not None else np.abs(self.diagonal)
                self.meta["cond"] = float(d.max() / d.min()) if d.min() > 0 else np.inf
        return self.meta["cond"]

    def norm(self):
        if self.is_dense:
            return float(np.linalg.norm(self.matrix, 2))
        return float(np.abs(self.diagonal).max())


# ---------------------------------------------------------------------------
# Kress quadrature on curves

def kress_weights(N):
    """First row of the periodic log-quadrature matrix R_{ij} = R(t_i - t_j)."""
    n = N // 2
    tau = 2 * np.pi * np.arange(N) / N
    m = np.arange(1, n)
    r = -(2 * np.pi / n) * (np.cos(np.outer(tau, m)) / m).sum(1) - (np.pi / n**2) * np.cos(n * tau)
    return r


def _pair_geometry(surface):
    cache = surface.__dict__.setdefault("_cache", {})
    if "pairs" not in cache:
        N = surface.n_nodes
        x = surface.nodes
        diff = x[:, None, :] - x[None, :, :]
        r = np.sqrt((diff**2).sum(-1))
        idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
        t = surface.t
        logterm = np.log(4 * np.sin((t[:, None] - t[None, :]) / 2) ** 2 + np.eye(N))
        R = kress_weights(N)[idx]
        dnu = (diff * surface.normals[:, None, :]).sum(-1)
        cache["pairs"] = dict(r=r, logterm=logterm, R=R, dnu=dnu)
    return cache["pairs"]


def _kress_blocks(surface, kappa, rows=None):
    """Dense Kress matrices of S and K* (optionally only selected rows)."""
    N = surface.n_nodes
    g = _pair_geometry(surface)
    sel = slice(None) if rows is None else rows
    r, logterm, R, dnu = g["r"][sel], g["logterm"][sel], g["R"][sel], g["dnu"][sel]
    speed = surface.speed
    rows_idx = np.arange(N)[sel]
    diag = r == 0
    rs = np.where(diag, 1.0, r)
    kr = kappa * rs
    J0, Y0 = special.j0(kr), special.y0(kr)
    J1, Y1 = special.j1(kr), special.y1(kr)
    # single layer
    M = 0.25j * (J0 + 1j * Y0) * speed
    M1 = -(1 / (4 * np.pi)) * J0 * speed
    M2 = M - M1 * logterm
    sp_i = speed[rows_idx]
    M2[diag] = ((0.25j - EULER_GAMMA / (2 * np.pi) - np.log(kappa * sp_i / 2) / (2 * np.pi)) * sp_i)
    M1[diag] = -(1 / (4 * np.pi)) * sp_i
    S = R * M1 + (2 * np.pi / N) * M2
    # adjoint double layer
    Lk = -0.25j * kappa * (J1 + 1j * Y1) * dnu / rs * speed
    L1 = (kappa / (4 * np.pi)) * J1 * dnu / rs * speed
    L1[diag] = 0.0
    L2 = Lk - L1 * logterm
    L2[diag] = -surface.curvature[rows_idx] * sp_i / (4 * np.pi)
    K = R * L1 + (2 * np.pi / N) * L2
    return S, K


def _harmonic_values(surface, kappa, nmax):
    a = surface.radius
    z = kappa * a
    if surface.dim == 2:
        t = jh_table(0.0, nmax, z)
        s = 0.5j * np.pi * a * t["JH"]
        k = 0.25j * np.pi * z * t["JH"] * (t["gJ"] + t["gH"])
    else:
        t = jh_table(0.5, nmax, z)
        jh = np.pi / (2 * z) * t["JH"]
        gj = t["gJ"] - 1 / (2 * z)
        gh = t["gH"] - 1 / (2 * z)
        s = 1j * kappa * a * a * jh
        k = 0.5j * kappa * z * a * jh * (gj + gh)
    return s, k


def _choose(surface, representation):
    if representation == "auto":
        if surface.dim == 3:
            representation = "harmonic"
        else:
            representation = "dense"
    if representation == "harmonic" and not surface.rotation_invariant:
        raise CapabilityError(f"harmonic representation needs a circle or sphere, got {surface.kind}")
    if representation == "dense" and surface.dim == 3:
        raise CapabilityError("dense assembly is implemented for curves only")
    if representation not in ("dense", "harmonic"):
        raise DomainError(f"unknown representation {representation!r}")
    return representation


def _default_nmax(surface):
    return surface.n_nodes // 2 if surface.dim == 2 else surface.resolution


def assemble_pair(surface, wavenumber, representation="auto", nmax=None):
    """Assemble ``(S, K*)`` at one wavenumber, sharing kernel evaluations."""
    kappa = check_wavenumber(wavenumber)
    rep = _choose(surface, representation)
    if rep == "dense":
        S, K = _kress_blocks(surface, kappa)
        return (BoundaryOperator("S", kappa, surface, "dense", matrix=S),
                BoundaryOperator("Kstar", kappa, surface, "dense", matrix=K))
    nmax = _default_nmax(surface) if nmax is None else int(nmax)
    s, k = _harmonic_values(surface, kappa, nmax)
    return (BoundaryOperator("S", kappa, surface, "harmonic", diagonal=s),
            BoundaryOperator("Kstar", kappa, surface, "harmonic", diagonal=k))


def assemble_single(surface, wavenumber, representation="auto", nmax=None):
    """Single-layer operator S^kappa on the boundary.

    Parameters
    ----------
    surface : BoundarySurface
    wavenumber : float
    representation : {"auto", "dense", "harmonic"}
        ``"auto"`` gives dense Kress quadrature on curves and the harmonic
        diagonal on spheres.  Circles accept either.
    nmax : int, optional
        Highest harmonic order kept by the harmonic representation.
    """
    return assemble_pair(surface, wavenumber, representation, nmax)[0]


def assemble_kstar(surface, wavenumber, representation="auto", nmax=None):
    """Neumann-Poincare adjoint K*^kappa; see :func:`assemble_single`."""
    return assemble_pair(surface, wavenumber, representation, nmax)[1]


def circulant_symbols(surface, wavenumber):
    """Eigenvalues of the dense Kress S and K* on a circle, per FFT order.

    On a circle the Nystrom matrices are circulant, so one assembled row
    determines the whole discrete spectrum.  Returns arrays indexed like
    ``numpy.fft.fftfreq(N)``.
    """
    if not surface.is_circle:
        raise CapabilityError("circulant structure requires a circle")
    S, K = _kress_blocks(surface, check_wavenumber(wavenumber), rows=slice(0, 1))
    N = surface.n_nodes
    return N * np.fft.ifft(S[0]), N * np.fft.ifft(K[0])


# ---------------------------------------------------------------------------
# off-surface evaluation

def _node_spacing(surface):
    if surface.dim == 2:
        return float(surface.weights.max())
    return float(np.sqrt(surface.weights.max()))


def upsampled(surface, density, factor):
    """Curve at ``factor`` times the resolution with the density resampled.

    The density is trigonometrically interpolated, so the plain quadrature
    stays accurate ``factor`` times closer to the boundary.
    """
    factor = int(factor)
    if factor < 1:
        raise DomainError("upsampling factor must be a positive integer")
    if factor == 1:
        return surface, np.asarray(density)
    from .geometry import build_surface
    fine = build_surface(surface.descriptor(), factor * surface.n_nodes)
    return fine, signal.resample(np.asarray(density), factor * surface.n_nodes)


def upsampling_factor(surface, points):
    """Smallest factor that puts ``points`` beyond the default ``r_min`` of the refined curve."""
    from .geometry import distance_to_boundary
    d = float(distance_to_boundary(surface, points).min())
    if d <= 0:
        raise ProximityError("points on the boundary cannot be evaluated by quadrature")
    return max(1, int(np.ceil(4 * _node_spacing(surface) / d)))


def eval_potential(surface, density, points, wavenumber, mode="value", r_min=None, harmonic=False,
                   upsample=1):
    """Single-layer potential S^kappa[density] (or its gradient) off the surface.

    Parameters
    ----------
    surface : BoundarySurface
    density : ndarray
        Node samples, or harmonic coefficients when ``harmonic=True``
        (spheres: flat real-SH order; circles are always node samples).
    points : array_like, shape (m, d)
    wavenumber : float
    mode : {"value", "gradient"}
    r_min : float, optional
        Minimum admissible distance to the boundary nodes for the plain
        quadrature on curves; defaults to four node spacings.
    upsample : int
        Evaluate with the density interpolated to ``upsample`` times as many
        nodes (curves); the default ``r_min`` shrinks accordingly.

    Returns
    -------
    ndarray, shape (m,) or (m, d)
    """
    kappa = check_wavenumber(wavenumber)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != surface.dim:
        raise DomainError("points have the wrong dimension")
    if mode not in ("value", "gradient"):
        raise DomainError(f"unknown mode {mode!r}")
    density = np.asarray(density)
    if surface.dim == 3:
        return _eval_sphere(surface, density, pts, kappa, mode, harmonic)
    surface, density = upsampled(surface, density, upsample)
    if r_min is None:
        r_min = 4 * _node_spacing(surface)
    out = []
    for i0 in range(0, len(pts), 512):
        p = pts[i0:i0 + 512]
        diff = p[:, None, :] - surface.nodes[None, :, :]
        r = np.sqrt((diff**2).sum(-1))
        if r.min() < r_min:
            raise ProximityError(f"point within {r.min():.3e} < r_min={r_min:.3e} of the boundary")
        wd = surface.weights * density
        if mode == "value":
            out.append((0.25j * special.hankel1(0, kappa * r)) @ wd)
        else:
            k = green_radial_derivative(2, kappa, r) / r
            out.append(np.einsum("mj,mjd,j->md", k, diff, wd))
    return np.concatenate(out)


def _eval_sphere(surface, density, pts, kappa, mode, harmonic):
    if not surface.is_sphere:
        raise CapabilityError("3-D potentials are implemented for spheres only")
    L = surface.resolution
    coeffs = density if harmonic else harmonics.to_harmonic(surface, density)
    Lc = int(round(np.sqrt(len(coeffs)))) - 1
    a = surface.radius
    r, th, ph = harmonics.spherical_coords(pts)
    if np.any(np.abs(r - a) < 1e-12 * a) or np.any(r == 0) and mode == "gradient":
        raise ProximityError("sphere potentials are evaluated off the surface and away from the origin")
    inside = r < a
    val = np.zeros(len(pts), dtype=complex)
    grad = np.zeros((len(pts), 3), dtype=complex)
    jl_a = special.spherical_jn(np.arange(Lc + 1), kappa * a)
    hl_a = jl_a + 1j * special.spherical_yn(np.arange(Lc + 1), kappa * a)
    for l in range(Lc + 1):
        block = coeffs[l * l:(l + 1) ** 2]
        if not np.any(block):
            continue
        z = kappa * r
        jr = special.spherical_jn(l, z)
        djr = special.spherical_jn(l, z, derivative=True)
        with np.errstate(all="ignore"):
            hr = jr + 1j * special.spherical_yn(l, z)
            dhr = djr + 1j * special.spherical_yn(l, z, derivative=True)
        f = np.where(inside, jr * hl_a[l], jl_a[l] * hr) * 1j * kappa * a * a
        df = np.where(inside, djr * hl_a[l], jl_a[l] * dhr) * 1j * kappa**2 * a * a
        ang = np.zeros(len(pts))
        dth = np.zeros(len(pts))
        dph = np.zeros(len(pts))
        for m in range(-l, l + 1):
            c = block[m + l]
            if c == 0:
                continue
            ang = ang + c * harmonics.real_sph_harm(l, m, th, ph)
            if mode == "gradient":
                gt, gp = harmonics.real_sph_harm_grad(l, m, th, ph)
                dth = dth + c * gt
                dph = dph + c * gp
        val += f * ang
        if mode == "gradient":
            st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
            rhat = np.column_stack([st * cp, st * sp, ct])
            that = np.column_stack([ct * cp, ct * sp, -st])
            phat = np.column_stack([-sp, cp, np.zeros_like(sp)])
            grad += ((df * ang)[:, None] * rhat + (f / r * dth)[:, None] * that
                     + (f / (r * st) * dph)[:, None] * phat)
    if not np.all(np.isfinite(val)):
        raise ProximityError("non-finite sphere potential (point too close to the origin?)")
    return val if mode == "value" else grad


# ---------------------------------------------------------------------------

def solve_single(S, rhs, threshold=COND_THRESHOLD):
    """Solve ``S x = rhs`` after checking the condition number.

    Raises
    ------
    NearSingularError
        If the condition estimate exceeds ``threshold`` (near an interior
        Dirichlet eigenvalue); the exception carries the wavenumber.
    """
    c = S.cond()
    if not np.isfinite(c) or c > threshold:
        raise NearSingularError(S.wavenumber, c)
    rhs = np.asarray(rhs)
    if S.is_dense:
        return np.linalg.solve(S.matrix, rhs)
    inv = BoundaryOperator("Sinv", S.wavenumber, S.surface, "harmonic", diagonal=1.0 / S.diagonal)
    return inv.apply(rhs)


def weighted_norm(surface, density):
    return float(np.sqrt(np.sum(surface.weights * np.abs(density) ** 2)))
