"""Boundary curves and surfaces, interior offset surfaces and bump functions."""
import numpy as np
from scipy.special import roots_legendre

from .exceptions import CapabilityError, DomainError, GeometryError
from ._validation import check_positive

CURVE_KINDS = ("circle", "ellipse", "kite", "trig")
SURFACE_KINDS = ("sphere", "ellipsoid")


def _freeze(*arrays):
    for a in arrays:
        if isinstance(a, np.ndarray):
            a.setflags(write=False)


def _trig_coefficients(kind, params):
    """Return (c0, A, B) with x(t) = c0 + sum_k A_k cos kt + B_k sin kt."""
    if kind == "circle":
        a = params["radius"]
        return np.zeros(2), np.array([[a, 0.0]]), np.array([[0.0, a]])
    if kind == "ellipse":
        a, b = params["a"], params["b"]
        return np.zeros(2), np.array([[a, 0.0]]), np.array([[0.0, b]])
    if kind == "kite":
        # x(t) = (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)
        return (np.array([-0.65, 0.0]), np.array([[1.0, 0.0], [0.65, 0.0]]),
                np.array([[0.0, 1.5], [0.0, 0.0]]))
    if kind == "trig":
        A = np.atleast_2d(np.asarray(params["cos"], dtype=float))
        B = np.atleast_2d(np.asarray(params["sin"], dtype=float))
        if A.shape != B.shape or A.shape[1] != 2:
            raise DomainError("trig curve needs equal-shape (K, 2) 'cos' and 'sin' arrays")
        return np.asarray(params.get("center", [0.0, 0.0]), dtype=float), A, B
    raise DomainError(f"unknown curve kind {kind!r}")


class BoundarySurface:
    """Discretized smooth closed boundary of a bounded domain.

    Build instances with :func:`build_surface` (or the shortcuts
    :func:`circle`, :func:`kite`, ...).  All arrays are read-only.

    Attributes
    ----------
    dim : int
        2 for curves, 3 for surfaces.
    kind : str
    params : dict
        Shape parameters (echoed into reports).
    resolution : int
        Node count ``N`` for curves, harmonic cutoff ``L`` for surfaces.
    nodes, normals : ndarray, shape (n, dim)
    weights : ndarray, shape (n,)
        Quadrature weights for the surface measure.
    curvature : ndarray, shape (n,)
        Signed curvature (curves) or mean curvature (surfaces); a circle or
        sphere of radius ``a`` gives ``1/a``.
    """

    def __init__(self, kind, params, resolution):
        self.kind = kind
        self.params = dict(params)
        self.resolution = int(resolution)
        if kind in CURVE_KINDS:
            self.dim = 2
            self._build_curve()
        elif kind in SURFACE_KINDS:
            self.dim = 3
            self._build_surface()
        else:
            raise DomainError(f"unknown shape kind {kind!r}")
        _freeze(*[v for v in vars(self).values() if isinstance(v, np.ndarray)])

    # -- curves -----------------------------------------------------------
    def _build_curve(self):
        N = self.resolution
        if N < 16 or N % 2:
            raise DomainError(f"curve resolution must be even and >= 16, got {N}")
        self._trig = _trig_coefficients(self.kind, self.params)
        self.t = 2 * np.pi * np.arange(N) / N
        x, dx, ddx = self.parametrize(self.t)
        speed = np.hypot(dx[:, 0], dx[:, 1])
        if np.any(speed < 1e-12):
            raise GeometryError("parametrization has vanishing speed")
        self.nodes = x
        self.dx, self.ddx, self.speed = dx, ddx, speed
        self.normals = np.column_stack([dx[:, 1], -dx[:, 0]]) / speed[:, None]
        self.weights = speed * (2 * np.pi / N)
        self.curvature = (dx[:, 0] * ddx[:, 1] - dx[:, 1] * ddx[:, 0]) / speed**3
        self._check_curve()

    def parametrize(self, t):
        """Position and first two parameter derivatives at parameters ``t``."""
        if self.dim != 2:
            raise CapabilityError("parametrize(t) is defined for curves only")
        c0, A, B = self._trig
        t = np.asarray(t, dtype=float)
        k = np.arange(1, len(A) + 1)
        kt = np.multiply.outer(t, k)
        c, s = np.cos(kt), np.sin(kt)
        x = c0 + c @ A + s @ B
        dx = (-s * k) @ A + (c * k) @ B
        ddx = (-c * k**2) @ A + (-s * k**2) @ B
        return x, dx, ddx

    def _check_curve(self):
        M = 512
        x, _, _ = self.parametrize(2 * np.pi * np.arange(M) / M)
        area = 0.5 * np.sum(x[:, 0] * np.roll(x[:, 1], -1) - np.roll(x[:, 0], -1) * x[:, 1])
        if area <= 0:
            raise GeometryError("curve must be positively oriented (counterclockwise)")
        p, q = x, np.roll(x, -1, axis=0)
        d = q - p

        def cross(u, v):
            return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

        for i0 in range(0, M, 128):
            pi, di = p[i0:i0 + 128, None, :], d[i0:i0 + 128, None, :]
            den = cross(di, d[None])
            with np.errstate(divide="ignore", invalid="ignore"):
                s = cross(p[None] - pi, d[None]) / den
                u = cross(p[None] - pi, di) / den
            hit = (np.abs(den) > 1e-14) & (s > 1e-9) & (s < 1 - 1e-9) & (u > 1e-9) & (u < 1 - 1e-9)
            ii = np.arange(i0, min(i0 + 128, M))[:, None]
            jj = np.arange(M)[None, :]
            gap = np.abs(ii - jj)
            hit &= (gap > 1) & (gap < M - 1)
            if np.any(hit):
                raise GeometryError("parametrization is self-intersecting")

    # -- surfaces ---------------------------------------------------------
    def _build_surface(self):
        L = self.resolution
        if L < 8:
            raise DomainError(f"surface harmonic cutoff must be >= 8, got {L}")
        if self.kind == "sphere":
            a = self.params["radius"]
            self.axes = (a, a, a)
        else:
            self.axes = tuple(float(self.params[k]) for k in ("a", "b", "c"))
        ct, wt = roots_legendre(L + 1)
        nphi = 2 * L + 2
        phi = 2 * np.pi * np.arange(nphi) / nphi
        TH, PH = np.meshgrid(np.arccos(ct), phi, indexing="ij")
        self.theta, self.phi = TH.ravel(), PH.ravel()
        self.n_theta, self.n_phi = L + 1, nphi
        X, Xt, Xp, Xtt, Xtp, Xpp = self._surface_map(self.theta, self.phi)
        cr = np.cross(Xt, Xp)
        jac = np.linalg.norm(cr, axis=1)
        nu = cr / jac[:, None]
        sin_t = np.sin(self.theta)
        self.nodes, self.normals = X, nu
        self.weights = np.repeat(wt, nphi) * (2 * np.pi / nphi) * jac / sin_t
        E, F, G = (Xt * Xt).sum(1), (Xt * Xp).sum(1), (Xp * Xp).sum(1)
        Lf, Mf, Nf = -(Xtt * nu).sum(1), -(Xtp * nu).sum(1), -(Xpp * nu).sum(1)
        self.curvature = (E * Nf - 2 * F * Mf + G * Lf) / (2 * (E * G - F**2))

    def _surface_map(self, th, ph):
        a, b, c = self.axes
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        X = np.column_stack([a * st * cp, b * st * sp, c * ct])
        Xt = np.column_stack([a * ct * cp, b * ct * sp, -c * st])
        Xp = np.column_stack([-a * st * sp, b * st * cp, 0 * st])
        Xtt = np.column_stack([-a * st * cp, -b * st * sp, -c * ct])
        Xtp = np.column_stack([-a * ct * sp, b * ct * cp, 0 * st])
        Xpp = np.column_stack([-a * st * cp, -b * st * sp, 0 * st])
        return X, Xt, Xp, Xtt, Xtp, Xpp

    # -- convenience ------------------------------------------------------
    @property
    def n_nodes(self):
        return len(self.weights)

    @property
    def measure(self):
        """Total length (curves) or area (surfaces)."""
        return float(self.weights.sum())

    @property
    def is_circle(self):
        return self.kind == "circle"

    @property
    def is_sphere(self):
        return self.kind == "sphere"

    @property
    def rotation_invariant(self):
        return self.kind in ("circle", "sphere")

    @property
    def radius(self):
        if not self.rotation_invariant:
            raise CapabilityError(f"{self.kind} has no single radius")
        return float(self.params["radius"])

    @property
    def diameter(self):
        x = self.nodes
        if len(x) > 4000:
            x = x[:: len(x) // 2000]
        diff = x[:, None, :] - x[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    def descriptor(self):
        return {"kind": self.kind, **{k: (list(v) if isinstance(v, (list, tuple, np.ndarray)) else v)
                                      for k, v in self.params.items()}}

    def __repr__(self):
        return f"BoundarySurface({self.kind}, {self.params}, resolution={self.resolution})"


def build_surface(descriptor, resolution):
    """Build a boundary from a JSON-style descriptor.

    Parameters
    ----------
    descriptor : dict
        ``{"kind": "circle", "radius": 1.0}``, ``{"kind": "ellipse", "a": .., "b": ..}``,
        ``{"kind": "kite"}``, ``{"kind": "trig", "cos": [[..]], "sin": [[..]]}``,
        ``{"kind": "sphere", "radius": ..}`` or ``{"kind": "ellipsoid", "a":.., "b":.., "c":..}``.
    resolution : int
        Node count for curves (even, >= 16) or harmonic cutoff for surfaces (>= 8).
    """
    desc = dict(descriptor)
    kind = desc.pop("kind", None)
    if kind in ("circle", "sphere"):
        desc["radius"] = check_positive(desc.get("radius", 1.0), "radius")
    elif kind == "ellipse":
        for k in ("a", "b"):
            desc[k] = check_positive(desc[k], k)
    elif kind == "ellipsoid":
        for k in ("a", "b", "c"):
            desc[k] = check_positive(desc[k], k)
    elif kind not in CURVE_KINDS:
        raise DomainError(f"unknown shape kind {kind!r}")
    return BoundarySurface(kind, desc, resolution)


def circle(radius=1.0, n=128):
    return build_surface({"kind": "circle", "radius": radius}, n)


def ellipse(a, b, n=128):
    return build_surface({"kind": "ellipse", "a": a, "b": b}, n)


def kite(n=128):
    return build_surface({"kind": "kite"}, n)


def sphere(radius=1.0, L=16):
    return build_surface({"kind": "sphere", "radius": radius}, L)


def ellipsoid(a, b, c, L=16):
    return build_surface({"kind": "ellipsoid", "a": a, "b": b, "c": c}, L)


# ---------------------------------------------------------------------------
# interior offset surfaces

def _curve_nearest(surface, y, n_samples=4096):
    """Distance from points ``y`` to a curve: sampling plus Newton refinement."""
    ts = 2 * np.pi * np.arange(n_samples) / n_samples
    xs, _, _ = surface.parametrize(ts)
    d2 = ((y[:, None, :] - xs[None, :, :]) ** 2).sum(-1)
    t = ts[np.argmin(d2, axis=1)]
    for _ in range(8):
        x, dx, ddx = surface.parametrize(t)
        r = x - y
        f = (r * dx).sum(1)
        fp = (dx * dx).sum(1) + (r * ddx).sum(1)
        t = t - f / np.where(np.abs(fp) > 1e-14, fp, 1.0)
    x, _, _ = surface.parametrize(t)
    return np.minimum(np.linalg.norm(x - y, axis=1), np.sqrt(d2.min(1)))


def _surface_nearest(surface, y, n_theta=96):
    th = np.linspace(0, np.pi, n_theta)
    ph = np.linspace(0, 2 * np.pi, 2 * n_theta, endpoint=False)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    TH, PH = TH.ravel(), PH.ravel()
    xs = surface._surface_map(TH, PH)[0]
    dmin = np.empty(len(y))
    for i0 in range(0, len(y), 256):
        yy = y[i0:i0 + 256]
        d2 = ((yy[:, None, :] - xs[None]) ** 2).sum(-1)
        k = np.argmin(d2, axis=1)
        t, p = TH[k].copy(), PH[k].copy()
        best = np.sqrt(d2[np.arange(len(yy)), k])
        for _ in range(12):
            X, Xt, Xp, Xtt, Xtp, Xpp = surface._surface_map(t, p)
            r = X - yy
            g = np.column_stack([(r * Xt).sum(1), (r * Xp).sum(1)])
            h11 = (Xt * Xt).sum(1) + (r * Xtt).sum(1)
            h12 = (Xt * Xp).sum(1) + (r * Xtp).sum(1)
            h22 = (Xp * Xp).sum(1) + (r * Xpp).sum(1)
            det = h11 * h22 - h12**2
            ok = det > 1e-12
            det = np.where(ok, det, 1.0)
            t = t - np.where(ok, (h22 * g[:, 0] - h12 * g[:, 1]) / det, 0.0)
            p = p - np.where(ok, (h11 * g[:, 1] - h12 * g[:, 0]) / det, 0.0)
        X = surface._surface_map(t, p)[0]
        dmin[i0:i0 + 256] = np.minimum(best, np.linalg.norm(X - yy, axis=1))
    return dmin


def distance_to_origin(surface):
    """rho_0 = dist(boundary, 0), refined beyond the node spacing."""
    if surface.dim == 2:
        return float(_curve_nearest(surface, np.zeros((1, 2)))[0])
    if surface.kind == "sphere":
        return surface.radius
    return float(min(surface.axes))


def distance_to_boundary(surface, points):
    """Euclidean distance from each point to the continuous boundary."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if surface.dim == 2:
        return _curve_nearest(surface, points)
    if surface.kind == "sphere":
        return np.abs(surface.radius - np.linalg.norm(points, axis=1))
    return _surface_nearest(surface, points)


class InteriorSurface:
    """Interior surface obtained by scaling the boundary towards the origin.

    ``F_R(x) = (1 - R / rho_0) x`` with ``rho_0 = dist(boundary, 0)``.

    Attributes
    ----------
    parent : BoundarySurface
    R : float
    scale : float
        ``1 - R / rho_0``.
    nodes, normals, weights : ndarray
        Node positions on the interior surface, normals (unchanged by the
        scaling) and quadrature weights ``scale^(d-1) * parent.weights``.
    jacobian : ndarray
        Surface Jacobian determinant of ``F_R`` at each node.
    """

    def __init__(self, parent, R, check=True):
        self.parent = parent
        self.R = float(R)
        self.rho0 = distance_to_origin(parent)
        self.scale = 1.0 - self.R / self.rho0
        self.dim = parent.dim
        self.jacobian = np.full(parent.n_nodes, self.scale ** (self.dim - 1))
        self.nodes = self.scale * parent.nodes
        self.normals = parent.normals
        self.weights = self.jacobian * parent.weights
        self.curvature = parent.curvature / self.scale
        _freeze(self.jacobian, self.nodes, self.weights, self.curvature)
        if check:
            dist = distance_to_boundary(parent, self.nodes)
            self.min_distance = float(dist.min())
            if self.min_distance < self.R - 1e-8:
                raise GeometryError(
                    f"offset surface is closer than R to the boundary ({self.min_distance:.3e} < {self.R})")

    def map(self, x):
        return self.scale * np.asarray(x, dtype=float)

    def inverse(self, y):
        return np.asarray(y, dtype=float) / self.scale

    @property
    def measure(self):
        return float(self.weights.sum())

    @property
    def n_nodes(self):
        return len(self.weights)

    def __repr__(self):
        return f"InteriorSurface(R={self.R}, scale={self.scale:.6g}, parent={self.parent!r})"


def offset_surface(surface, R):
    """Interior surface at offset ``R`` (see :class:`InteriorSurface`)."""
    R = check_positive(R, "R")
    # star-shaped about the origin: position and normal never orthogonal/opposed
    if np.any((surface.nodes * surface.normals).sum(1) <= 0):
        raise CapabilityError("offset surfaces need a boundary star-shaped about the origin")
    rho0 = distance_to_origin(surface)
    if R >= rho0:
        raise DomainError(f"R={R} must be smaller than dist(boundary, 0)={rho0:.6g}")
    return InteriorSurface(surface, R)


# ---------------------------------------------------------------------------
# bump functions

class BumpFunction:
    """Smooth compactly supported angular bump.

    The bump is a function of the angle between ``x`` and the center direction
    (measured from the origin), so the same object can be evaluated on the
    boundary and on its scaled interior copies.

    Parameters
    ----------
    center : array_like or None
        A point on the surface (only its direction matters).  ``None`` gives
        the constant function 1.
    width : float or None
        Full angular width of the support, ``0 < width <= 2 pi``.
    """

    def __init__(self, center=None, width=None):
        if center is None:
            self.center, self.width = None, None
            return
        c = np.asarray(center, dtype=float)
        n = np.linalg.norm(c)
        if n == 0:
            raise DomainError("bump center must be nonzero")
        width = check_positive(width, "width")
        if width > 2 * np.pi:
            raise DomainError(f"bump width {width} exceeds the period 2*pi")
        self.center = c / n
        self.width = width

    @property
    def is_constant(self):
        return self.center is None

    def support_rule(self, dim, n_polar=128, n_azimuth=64):
        """Quadrature on the unit circle/sphere restricted to the support.

        Gauss-Legendre in the angle from the center (the bump is smooth but
        not band-limited, so node grids on the whole sphere converge slowly)
        and the trapezoid rule in the azimuth about the center.

        Returns
        -------
        points : ndarray, shape (m, dim)
        weights : ndarray, shape (m,)
            Surface-measure weights already multiplied by the bump values.
        """
        if self.is_constant:
            raise DomainError("the constant bump has no compact support")
        if dim != len(self.center):
            raise DomainError("bump dimension does not match dim")
        x, w = np.polynomial.legendre.leggauss(int(n_polar))
        if dim == 2:
            half = 0.5 * self.width
            ang = half * x
            c0 = np.arctan2(self.center[1], self.center[0])
            pts = np.column_stack([np.cos(c0 + ang), np.sin(c0 + ang)])
            return pts, half * w * self(pts)
        top = min(0.5 * self.width, np.pi)
        alpha, wa = 0.5 * top * (x + 1), 0.5 * top * w * np.sin(0.5 * top * (x + 1))
        beta = 2 * np.pi * np.arange(int(n_azimuth)) / int(n_azimuth)
        # orthonormal frame (e1, e2, center)
        e1 = np.cross(self.center, [1.0, 0.0, 0.0] if abs(self.center[0]) < 0.9 else [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(self.center, e1)
        A, B = np.meshgrid(alpha, beta, indexing="ij")
        pts = (np.sin(A)[..., None] * (np.cos(B)[..., None] * e1 + np.sin(B)[..., None] * e2)
               + np.cos(A)[..., None] * self.center).reshape(-1, 3)
        wts = (wa[:, None] * np.full(len(beta), 2 * np.pi / len(beta))[None]).ravel()
        return pts, wts * self(pts)

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_constant:
            return np.ones(len(points))
        if points.shape[1] != len(self.center):
            raise DomainError("bump dimension does not match points")
        u = points / np.linalg.norm(points, axis=1, keepdims=True)
        ang = np.arccos(np.clip(u @ self.center, -1.0, 1.0))
        tau = ang / (0.5 * self.width)
        out = np.zeros(len(points))
        inside = tau < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - tau[inside] ** 2))
        return out

    @property
    def sup(self):
        return 1.0

    def descriptor(self):
        if self.is_constant:
            return {"kind": "constant"}
        return {"kind": "bump", "center": self.center.tolist(), "width": self.width}


def bump(center=None, width=None):
    return BumpFunction(center, width)


def surface_integral(surface, values):
    """Quadrature of sampled ``values`` with the surface's native weights."""
    values = np.asarray(values)
    if values.shape[0] != surface.n_nodes:
        raise DomainError("values must be sampled at the surface nodes")
    out = np.tensordot(surface.weights, values, axes=(0, 0))
    if np.iscomplexobj(out) and np.all(np.abs(np.imag(out)) <= 1e-14 * (1 + np.abs(out))):
        out = np.real(out)
    return out
