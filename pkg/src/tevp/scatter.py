"""Penetrable-obstacle scattering, far fields and Herglotz-wave invisibility.

The total interior field is ``u = S^{kQ}[phi]`` and the scattered field is
``S^k[psi]`` outside; continuity of traces and normal derivatives gives

    [ S^{kQ}          -S^k         ] [phi]   [ w      ]
    [ 1/2 + K*^{kQ}   1/2 - K*^k   ] [psi] = [ d_nu w ]

for an incident field ``w``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CapabilityError, DomainError, FitError, NearSingularError
from .layerpot import COND_THRESHOLD, assemble_pair, eval_potential, upsampling_factor
from .oracle import RadialMode, radial_mode_eval
from ._validation import check_contrast, check_points, check_positive, check_wavenumber

logger = logging.getLogger(__name__)

FIT_RINGS = (0.3, 0.6, 0.9)


def far_field_constant(d, kappa):
    """Constant ``c`` with ``G(x, y) ~ c e^{i k |x|} |x|^{-(d-1)/2} e^{-i k xhat.y}``."""
    if d == 2:
        return np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * kappa)
    if d == 3:
        return 1.0 / (4 * np.pi)
    raise DomainError(f"dimension must be 2 or 3, got {d}")


# ---------------------------------------------------------------------------
# incident fields

class PlaneWave:
    """``exp(i kappa x . d)`` with unit direction ``d`` (angle or vector)."""

    def __init__(self, kappa, direction):
        self.kappa = check_wavenumber(kappa)
        d = np.atleast_1d(np.asarray(direction, dtype=float))
        if d.size == 1:
            d = np.array([np.cos(d[0]), np.sin(d[0])])
        n = np.linalg.norm(d)
        if n == 0:
            raise DomainError("direction must be nonzero")
        self.direction = d / n

    def value(self, points):
        pts = np.atleast_2d(points)
        return np.exp(1j * self.kappa * pts @ self.direction)

    def gradient(self, points):
        return 1j * self.kappa * self.value(points)[:, None] * self.direction[None, :]

    def with_kappa(self, kappa):
        return PlaneWave(kappa, self.direction)

    def descriptor(self):
        return {"kind": "plane", "kappa": self.kappa, "direction": self.direction.tolist()}


def direction_grid(M, dim=2):
    """Equispaced directions on the unit circle with trapezoid weights."""
    if dim != 2:
        raise CapabilityError("direction grids are implemented on the unit circle")
    M = int(M)
    if M < 1:
        raise DomainError("M must be positive")
    th = 2 * np.pi * np.arange(M) / M
    return np.column_stack([np.cos(th), np.sin(th)]), np.full(M, 2 * np.pi / M)


@dataclass(eq=False)
class HerglotzDensity:
    """Herglotz wave ``v_g(x) = sum_m w_m exp(i kappa x.theta_m) g_m``.

    Attributes
    ----------
    kappa : float
    directions : ndarray, shape (M, d)
    weights : ndarray, shape (M,)
    g : ndarray, shape (M,)
    regularization : float
    eps_fit : float
        Relative fit error on the sampling grid (``nan`` if not fitted).
    """

    kappa: float
    directions: np.ndarray
    weights: np.ndarray
    g: np.ndarray
    regularization: float = 0.0
    eps_fit: float = np.nan

    def _phase(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.exp(1j * self.kappa * pts @ self.directions.T)

    def value(self, points):
        return self._phase(points) @ (self.weights * self.g)

    def gradient(self, points):
        E = self._phase(points) * (self.weights * self.g)[None, :]
        return 1j * self.kappa * E @ self.directions

    @property
    def norm(self):
        """``||g||`` in the weighted L2 norm over directions."""
        return float(np.sqrt(np.sum(self.weights * np.abs(self.g) ** 2)))

    def with_kappa(self, kappa):
        return HerglotzDensity(check_wavenumber(kappa), self.directions, self.weights, self.g,
                               self.regularization, self.eps_fit)

    def jacobi_anger(self, nmax):
        """Coefficients ``c_n`` with ``v_g = sum_n c_n J_n(kappa r) e^{i n theta}`` (2-D)."""
        n = np.arange(-nmax, nmax + 1)
        th = np.arctan2(self.directions[:, 1], self.directions[:, 0])
        return (1j ** n) * (np.exp(-1j * np.outer(n, th)) @ (self.weights * self.g))

    def descriptor(self):
        return {"kind": "herglotz", "kappa": self.kappa, "M": len(self.g),
                "regularization": self.regularization, "eps_fit": self.eps_fit, "norm": self.norm}


# ---------------------------------------------------------------------------
# forward problem

@dataclass(eq=False)
class ForwardSolution:
    """Densities of the transmission scattering problem.

    ``u = S^{kQ}[phi]`` inside and the scattered field ``S^k[psi]`` outside.
    """

    surface: object
    kappa: float
    Q: float
    phi: np.ndarray
    psi: np.ndarray
    residual: float
    incident: object
    events: list = field(default_factory=list)

    def interior(self, points, r_min=None, upsample=1):
        return eval_potential(self.surface, self.phi, points, self.kappa * self.Q, r_min=r_min, upsample=upsample)

    def scattered(self, points, r_min=None, upsample=1):
        return eval_potential(self.surface, self.psi, points, self.kappa, r_min=r_min, upsample=upsample)


def _block_system(surface, kappa, Q):
    S, K = assemble_pair(surface, kappa, "dense")
    SQ, KQ = assemble_pair(surface, kappa * Q, "dense")
    N = surface.n_nodes
    eye = np.eye(N)
    return np.block([[SQ.matrix, -S.matrix], [0.5 * eye + KQ.matrix, 0.5 * eye - K.matrix]])


def solve_forward(surface, Q, kappa, incident, threshold=COND_THRESHOLD, perturb=1e-4, max_tries=5):
    """Solve the transmission scattering problem for an incident field.

    Parameters
    ----------
    surface : BoundarySurface
        A curve (dense Kress operators).
    Q : float
        Contrast; ``Q = 1`` is allowed and gives no scattering.
    kappa : float
    incident : object
        Provides ``value(points)`` and ``gradient(points)``; an object with
        ``with_kappa`` is re-evaluated if the wavenumber is perturbed.
    threshold : float
        Condition-number limit of the block system; beyond it ``kappa`` is
        shifted by ``perturb * kappa`` and the event logged.

    Returns
    -------
    ForwardSolution
    """
    if surface.dim != 2:
        raise CapabilityError("forward scattering is implemented for curves")
    kappa = check_wavenumber(kappa)
    Q = check_positive(Q, "Q")
    events = []
    k = kappa
    for _ in range(max_tries):
        M = _block_system(surface, k, Q)
        c = np.linalg.cond(M)
        if np.isfinite(c) and c <= threshold:
            break
        events.append({"event": "block-breakdown", "kappa": k, "cond": float(c), "shifted_to": k + perturb * kappa})
        logger.info("near-singular transmission system at kappa=%.10g (cond %.3g)", k, c)
        k += perturb * kappa
    else:
        raise NearSingularError(k, c, "repeated breakdowns of the transmission system")
    inc = incident.with_kappa(k) if (k != kappa and hasattr(incident, "with_kappa")) else incident
    x = surface.nodes
    rhs = np.concatenate([inc.value(x), (inc.gradient(x) * surface.normals).sum(1)])
    sol = np.linalg.solve(M, rhs)
    res = float(np.linalg.norm(M @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300))
    N = surface.n_nodes
    return ForwardSolution(surface, k, Q, sol[:N], sol[N:], res, inc, events)


# ---------------------------------------------------------------------------
# far field

@dataclass(eq=False)
class FarFieldResult:
    """Far-field pattern on a direction grid."""

    directions: np.ndarray
    weights: np.ndarray
    pattern: np.ndarray
    solution: object = None

    @property
    def norm(self):
        return float(np.sqrt(np.sum(self.weights * np.abs(self.pattern) ** 2)))

    def near_field(self, points, r_min=None):
        if self.solution is None:
            raise DomainError("no densities attached")
        return self.solution.scattered(points, r_min)

    def incident_descriptor(self):
        inc = getattr(self.solution, "incident", None)
        return inc.descriptor() if hasattr(inc, "descriptor") else None


def far_field(solution, directions=None, M=256, psi=None):
    """Far-field pattern ``c(d, k) int exp(-i k xhat.y) psi(y) dsigma(y)``.

    Parameters
    ----------
    solution : ForwardSolution
    directions : array_like, optional
        Angles (1-D) or unit vectors; defaults to ``M`` equispaced directions.
    psi : ndarray, optional
        Override the exterior density (e.g. zero).
    """
    s = solution.surface
    if directions is None:
        dirs, w = direction_grid(M, s.dim)
    else:
        d = np.asarray(directions, dtype=float)
        dirs = np.column_stack([np.cos(d), np.sin(d)]) if d.ndim == 1 else d
        w = np.full(len(dirs), 2 * np.pi / len(dirs))
    dens = solution.psi if psi is None else np.asarray(psi)
    k = solution.kappa
    E = np.exp(-1j * k * dirs @ s.nodes.T)
    pattern = far_field_constant(s.dim, k) * (E @ (s.weights * dens))
    return FarFieldResult(dirs, w, pattern, solution)


def optical_theorem_defect(solution, M=512):
    """``| ||psi_inf||^2 - (optical-theorem right side) |`` for plane-wave incidence (2-D)."""
    inc = solution.incident
    if not isinstance(inc, PlaneWave):
        raise DomainError("optical theorem needs plane-wave incidence")
    ff = far_field(solution, M=M)
    fwd = far_field(solution, directions=inc.direction[None, :]).pattern[0]
    rhs = -np.sqrt(8 * np.pi / solution.kappa) * np.real(np.exp(0.25j * np.pi) * fwd)
    return float(abs(ff.norm**2 - rhs))


# ---------------------------------------------------------------------------
# Herglotz fitting

def interior_fit_grid(surface, rings=FIT_RINGS):
    """Sample points and area weights on scaled copies of the boundary.

    The copies are ``f * x(t)`` for ``f`` in ``rings`` (radii ``f * rho_0``
    on the unit-centred circle).  Weights approximate the L2(D) norm with a
    one-sided rule in the scaling parameter.
    """
    if surface.dim != 2:
        raise CapabilityError("interior fit grids are implemented for curves")
    if np.any((surface.nodes * surface.normals).sum(1) <= 0):
        raise CapabilityError("interior fit grids need a boundary star-shaped about the origin")
    cross = np.abs(surface.nodes[:, 0] * surface.dx[:, 1] - surface.nodes[:, 1] * surface.dx[:, 0])
    dt = 2 * np.pi / surface.n_nodes
    scales = np.asarray(rings, dtype=float)
    if np.any(scales <= 0) or np.any(scales >= 1) or np.any(np.diff(scales) <= 0):
        raise DomainError("ring fractions must increase within (0, 1)")
    ds = np.diff(np.concatenate([[0.0], scales]))
    pts, wts = [], []
    for s, h in zip(scales, ds):
        pts.append(s * surface.nodes)
        wts.append(s * h * cross * dt)
    return np.concatenate(pts), np.concatenate(wts)


def herglotz_fit(points, values, kappa, M, regularization=0.0, weights=None, diameter=None,
                 cond_limit=1e12):
    """Tikhonov fit ``min ||v_g - v||^2 + reg ||g||^2`` over ``M`` directions.

    Parameters
    ----------
    points : array_like, shape (m, 2)
    values : array_like, shape (m,)
        Samples of the target field.
    kappa : float
    M : int
        Number of plane-wave directions; needs ``M >= 2 kappa diam``.
    regularization : float
    weights : array_like, optional
        Quadrature weights defining the discrete L2 norm (default uniform).
    diameter : float, optional
        Domain diameter for the ``M`` check (default: diameter of the points).

    Returns
    -------
    HerglotzDensity
        With ``eps_fit = ||v_g - v|| / ||v||``.
    """
    kappa = check_wavenumber(kappa)
    pts = check_points(points, 2)
    v = np.asarray(values, dtype=complex)
    if v.shape != (len(pts),):
        raise DomainError("values must have one entry per point")
    diam = diameter if diameter is not None else 2 * float(np.linalg.norm(pts, axis=1).max())
    if M < 2 * kappa * diam:
        raise DomainError(f"M={M} directions under-resolve kappa*diam={kappa * diam:.3g} (need >= {2 * kappa * diam:.3g})")
    reg = float(regularization)
    if reg < 0:
        raise DomainError("regularization must be nonnegative")
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float)
    dirs, dw = direction_grid(M)
    H = np.exp(1j * kappa * pts @ dirs.T) * dw[None, :]
    sw = np.sqrt(w)
    # regularize in the weighted direction norm: g = diag(dw)^(-1/2) y
    Hy = sw[:, None] * H / np.sqrt(dw)[None, :]
    U, sv, Vh = np.linalg.svd(Hy, full_matrices=False)
    if reg == 0 and (sv[-1] == 0 or sv[0] / sv[-1] > cond_limit):
        raise FitError("ill-conditioned fit; supply a positive regularization")
    y = Vh.conj().T @ ((sv / (sv**2 + reg)) * (U.conj().T @ (sw * v)))
    g = y / np.sqrt(dw)
    out = HerglotzDensity(kappa, dirs, dw, g, reg)
    fit = out.value(pts)
    out.eps_fit = float(np.sqrt(np.sum(w * np.abs(fit - v) ** 2) / np.sum(w * np.abs(v) ** 2)))
    return out


# ---------------------------------------------------------------------------
# invisibility

def _samplers(mode, up=1):
    """(u, v) evaluators of a transmission mode on interior points."""
    if isinstance(mode, RadialMode):
        return (lambda pts: radial_mode_eval(mode, pts)[0]), (lambda pts: radial_mode_eval(mode, pts)[1])
    if hasattr(mode, "u") and hasattr(mode, "v"):
        return (lambda pts: mode.u(pts, upsample=up)), (lambda pts: mode.v(pts, upsample=up))
    raise DomainError("mode must provide u(points) and v(points)")


def invisibility_report(surface, Q, kappa, mode, ladder=None, M=None, baseline_direction=0.0,
                        control_shift=0.01, rings=FIT_RINGS):
    """Herglotz-approximation ladder at a transmission eigenvalue.

    For each regularization in ``ladder``: fit ``g`` to the incident-side
    eigenfunction ``v`` on the interior grid, scatter ``v_g`` and record
    ``eps_fit``, ``||psi_inf||`` and the distance of the total interior field
    from the eigenfunction ``u`` on the grid.

    Also records a plane-wave baseline at ``kappa`` (``||psi_inf||`` for
    unit incident density) and a negative control: the tightest ``g``
    scattered at ``kappa + control_shift``.

    Returns
    -------
    dict with ``ladder`` (list of rows), ``baseline``, ``control`` and summary ratios.
    """
    Q = check_contrast(Q)
    kappa = check_wavenumber(kappa)
    if ladder is None:
        ladder = 10.0 ** -np.arange(2, 14)
    pts, w = interior_fit_grid(surface, rings)
    up = upsampling_factor(surface, pts)
    u_mode, v_mode = _samplers(mode, up)
    v, u_ref = v_mode(pts), u_mode(pts)
    if M is None:
        M = int(np.ceil(2 * kappa * surface.diameter)) + 8
    rows = []
    tight = None
    for reg in ladder:
        g = herglotz_fit(pts, v, kappa, M, reg, weights=w, diameter=surface.diameter)
        sol = solve_forward(surface, Q, kappa, g)
        ff = far_field(sol)
        u = sol.interior(pts, upsample=up)
        dev = float(np.sqrt(np.sum(w * np.abs(u - u_ref) ** 2) / np.sum(w * np.abs(u_ref) ** 2)))
        rows.append({"regularization": float(reg), "eps_fit": g.eps_fit, "g_norm": g.norm,
                     "far_field_norm": ff.norm, "interior_deviation": dev,
                     "ratio_far": ff.norm / g.eps_fit if g.eps_fit > 0 else np.inf,
                     "ratio_interior": dev / g.eps_fit if g.eps_fit > 0 else np.inf})
        if tight is None or g.eps_fit < tight.eps_fit:
            tight = g
    base = far_field(solve_forward(surface, Q, kappa, PlaneWave(kappa, baseline_direction))).norm
    pw_norm = 1.0
    control_sol = solve_forward(surface, Q, kappa + control_shift, tight.with_kappa(kappa + control_shift))
    control = far_field(control_sol).norm
    eps = np.array([r["eps_fit"] for r in rows])
    ratios = np.array([r["ratio_far"] for r in rows])
    tight_row = rows[int(np.argmin(eps))]
    return {
        "kappa": kappa, "Q": Q, "M": M, "ladder": rows,
        "eps_range": float(eps.max() / eps.min()),
        "ratio_spread": float(ratios.max() / ratios.min()),
        "baseline": {"far_field_norm": base, "incident_density_norm": pw_norm},
        "tight": {"far_field_norm": tight_row["far_field_norm"], "g_norm": tight_row["g_norm"],
                  "relative_to_baseline": tight_row["far_field_norm"] / (tight_row["g_norm"] * base / pw_norm)},
        "control": {"kappa": kappa + control_shift, "far_field_norm": control, "g_norm": tight.norm,
                    "ratio_to_tight": control / tight_row["far_field_norm"]},
    }
