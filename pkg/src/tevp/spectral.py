"""Transmission operators T, B, A, eigenvalue windows and exact eigenvalues.

With ``u = S^{kQ}[phi]`` inside and ``v = S^{k}[varphi]`` the incident field,
equal traces force ``varphi = (S^k)^{-1} S^{kQ} phi`` and equal interior
normal derivatives reduce to ``T phi = 0`` with

    T = (1/2 + K*^{kQ}) - (1/2 + K*^{k}) (S^k)^{-1} S^{kQ}.

The generalized eigenproblem uses ``W = c (-Delta + 1) T`` normalized so that
its harmonic symbol tends to 1, ``B = I - W`` and ``A = B + B* - B* B``,
so that ``A = I - W* W <= I`` and ``A phi = phi`` exactly when ``T phi = 0``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import harmonics
from .exceptions import CalibrationError, CapabilityError, DomainError, NearSingularError
from .layerpot import (COND_THRESHOLD, BoundaryOperator, _harmonic_values, assemble_pair,
                       circulant_symbols, eval_potential, solve_single, weighted_norm)
from ._validation import check_contrast, check_epsilon, check_kappa_range, check_positive, check_wavenumber

logger = logging.getLogger(__name__)

CALIBRATION_WINDOW = (4.0, 8.0)
CALIBRATION_TOL = 0.05


def _representation(surface, representation):
    if representation == "auto":
        return "harmonic" if surface.rotation_invariant else "dense"
    if representation == "harmonic" and not surface.rotation_invariant:
        raise CapabilityError("harmonic representation needs a circle or sphere")
    if representation == "dense" and surface.dim == 3:
        raise CapabilityError("dense operators are available for curves only")
    return representation


def _harmonic_orders(surface):
    """Orders n (or degrees l) of the harmonic diagonal and their multiplicities."""
    if surface.dim == 2:
        return lambda n: np.where(n == 0, 1, 2)
    return lambda n: 2 * n + 1


def scaled_frequency(surface, orders, kappa):
    """Semiclassical frequency |xi| = h * sqrt(Laplace-Beltrami eigenvalue)."""
    orders = np.asarray(orders, dtype=float)
    a = surface.radius
    if surface.dim == 2:
        return orders / (kappa * a)
    return np.sqrt(orders * (orders + 1)) / (kappa * a)


def fourier_diff_matrix(N):
    """Spectral first-derivative matrix on N equispaced periodic nodes."""
    k = np.fft.fftfreq(N, 1.0 / N)
    if N % 2 == 0:
        k[N // 2] = 0.0
    return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(N), axis=0), axis=0))


def laplace_beltrami_plus_one(surface, representation="auto", nmax=None):
    """The positive operator ``-Delta_boundary + 1``.

    Harmonic representation: ``n^2/a^2 + 1`` (circle) or ``l(l+1)/a^2 + 1``
    (sphere).  Dense representation on curves: Fourier differentiation in
    the parameter with the metric factor ``1/|x'(t)|``.
    """
    rep = _representation(surface, representation)
    if rep == "harmonic":
        if nmax is None:
            nmax = surface.n_nodes // 2 if surface.dim == 2 else surface.resolution
        n = np.arange(nmax + 1, dtype=float)
        a = surface.radius
        lam = (n**2 if surface.dim == 2 else n * (n + 1)) / a**2 + 1.0
        return BoundaryOperator("L", None, surface, "harmonic", diagonal=lam.astype(complex))
    N = surface.n_nodes
    D = fourier_diff_matrix(N)
    inv_speed = 1.0 / surface.speed
    lap = inv_speed[:, None] * (D @ (inv_speed[:, None] * D))
    # D annihilates the Nyquist mode; give it its second derivative -(N/2)^2
    nyq = (-1.0) ** np.arange(N)
    lap -= (N / 2) ** 2 * (inv_speed**2)[:, None] * np.outer(nyq, nyq) / N
    M = np.eye(surface.n_nodes) - lap
    return BoundaryOperator("L", None, surface, "dense", matrix=M.astype(complex))


def _t_from_parts(S, K, SQ, KQ, threshold=COND_THRESHOLD):
    if S.is_dense:
        N = S.matrix.shape[0]
        X = solve_single(S, SQ.matrix, threshold)
        T = (0.5 * np.eye(N) + KQ.matrix) - (0.5 * np.eye(N) + K.matrix) @ X
        return BoundaryOperator("T", S.wavenumber, S.surface, "dense", matrix=T)
    c = S.cond()
    if not np.isfinite(c) or c > threshold:
        raise NearSingularError(S.wavenumber, c)
    t = (0.5 + KQ.diagonal) - (0.5 + K.diagonal) * SQ.diagonal / S.diagonal
    return BoundaryOperator("T", S.wavenumber, S.surface, "harmonic", diagonal=t)


def build_T(surface, kappa, Q, representation="auto", nmax=None, threshold=COND_THRESHOLD):
    """Reduced transmission operator ``T(kappa)`` (see module docstring).

    ``Q = 1`` is accepted here and gives ``T = 0``.
    """
    kappa = check_wavenumber(kappa)
    Q = check_positive(Q, "Q")
    rep = _representation(surface, representation)
    S, K = assemble_pair(surface, kappa, rep, nmax)
    SQ, KQ = assemble_pair(surface, kappa * Q, rep, nmax)
    return _t_from_parts(S, K, SQ, KQ, threshold)


# ---------------------------------------------------------------------------
# calibration, B and A

def _weighted_hermitian(op):
    """Matrix of a dense node operator in the orthonormal weighted frame."""
    w = np.sqrt(op.surface.weights)
    return w[:, None] * op.matrix / w[None, :]


def _fit_plateau(q, xi):
    X = np.column_stack([q, -xi ** -2.0])
    sol, *_ = np.linalg.lstsq(X, np.ones_like(q), rcond=None)
    c, c2 = sol
    resid = c * q - 1.0 - c2 * xi ** -2.0
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    return complex(c), complex(c2), rms, float(np.abs(resid).max())


def _in_window(xi, lo, hi):
    # the curve perimeter is a quadrature value, so window edges get a relative slack
    return (xi >= lo * (1 - 1e-9)) & (xi <= hi * (1 + 1e-9))


def calibrate(surface, W0, kappa, window=CALIBRATION_WINDOW, tol=CALIBRATION_TOL):
    """Fit ``c`` so that ``c * W0`` has symbol ``1 + c2 |xi|^-2`` on the window.

    The fit residual is the root-mean-square misfit of the least-squares
    model; ``max_residual`` is the largest pointwise misfit.

    Returns
    -------
    dict with keys ``c_norm``, ``c2``, ``residual``, ``max_residual``, ``xi``, ``values``.
    """
    lo, hi = window
    if W0.is_dense:
        N = surface.n_nodes
        P = surface.measure
        n = np.arange(1, N // 2 - 1)
        xi = n * (2 * np.pi / P) / kappa
        sel = _in_window(xi, lo, hi)
        if xi.max() < hi * (1 - 1e-9) or sel.sum() < 3:
            raise CalibrationError(
                f"N={N} does not resolve scaled frequencies up to {hi} at kappa={kappa}")
        n, xi = n[sel], xi[sel]
        F = np.exp(1j * np.outer(surface.t, n))
        wgt = surface.weights[:, None]
        q = (np.conj(F) * wgt * (W0.matrix @ F)).sum(0) / (wgt * np.abs(F) ** 2).sum(0)
    else:
        orders = np.arange(len(W0.diagonal))
        xi_all = scaled_frequency(surface, orders, kappa)
        sel = _in_window(xi_all, lo, hi)
        if xi_all.max() < hi * (1 - 1e-9) or sel.sum() < 3:
            raise CalibrationError(f"harmonic cutoff too low to reach scaled frequency {hi}")
        q, xi = W0.diagonal[sel], xi_all[sel]
    c, c2, resid, worst = _fit_plateau(q, xi)
    if resid > tol:
        raise CalibrationError(f"calibration residual {resid:.3g} exceeds {tol}")
    return {"c_norm": c, "c2": c2, "residual": resid, "max_residual": worst,
            "xi": xi, "values": c * q, "window": (lo, hi)}


def calibrate_and_build_B(surface, kappa, Q, representation="auto", nmax=None,
                          window=CALIBRATION_WINDOW, T=None, L=None):
    """Calibrated ``B`` and the normalization constant.

    ``W = c_norm * L * T`` is fitted so that its symbol ``w_n`` tends to 1
    across the scaled-frequency window; ``B = I - W``.

    Returns
    -------
    B : BoundaryOperator
    c_norm : complex
    report : dict
        Calibration fit (``c2``, ``residual``, ``max_residual``, fitted values).
    """
    kappa = check_wavenumber(kappa)
    Q = check_contrast(Q)
    rep = _representation(surface, representation)
    if rep == "harmonic" and nmax is None:
        nmax = _pipeline_nmax(surface, kappa, window)
    if T is None:
        T = build_T(surface, kappa, Q, rep, nmax)
    if L is None:
        L = laplace_beltrami_plus_one(surface, rep, nmax=None if T.is_dense else len(T.diagonal) - 1)
    if T.is_dense:
        W0 = BoundaryOperator("LT", kappa, surface, "dense", matrix=L.matrix @ T.matrix)
    else:
        W0 = BoundaryOperator("LT", kappa, surface, "harmonic", diagonal=L.diagonal * T.diagonal)
    report = calibrate(surface, W0, kappa, window)
    c = report["c_norm"]
    if T.is_dense:
        W = BoundaryOperator("W", kappa, surface, "dense", matrix=c * W0.matrix)
        B = BoundaryOperator("B", kappa, surface, "dense", matrix=np.eye(len(W.matrix)) - W.matrix)
    else:
        W = BoundaryOperator("W", kappa, surface, "harmonic", diagonal=c * W0.diagonal)
        B = BoundaryOperator("B", kappa, surface, "harmonic", diagonal=1.0 - W.diagonal)
    report["W"] = W
    return B, c, report


def build_A(B):
    """``A = B + B* - B* B`` (adjoint in the weighted surface inner product).

    The result is Hermitian-symmetrized; the relative defect before
    symmetrization is stored in ``A.meta["hermitian_defect"]``.
    """
    if B.is_dense:
        Bh = _weighted_hermitian(B)
        Ah = Bh + Bh.conj().T - Bh.conj().T @ Bh
        nrm = np.linalg.norm(Ah)
        defect = float(np.linalg.norm(Ah - Ah.conj().T) / nrm) if nrm > 0 else 0.0
        Ah = 0.5 * (Ah + Ah.conj().T)
        w = np.sqrt(B.surface.weights)
        A = BoundaryOperator("A", B.wavenumber, B.surface, "dense", matrix=Ah / w[:, None] * w[None, :],
                             meta={"hermitian_defect": defect, "hermitian": Ah})
        return A
    b = B.diagonal
    a = b + np.conj(b) - np.conj(b) * b
    nrm = np.abs(a).max()
    defect = float(np.abs(a.imag).max() / nrm) if nrm > 0 else 0.0
    return BoundaryOperator("A", B.wavenumber, B.surface, "harmonic", diagonal=a.real.astype(complex),
                            meta={"hermitian_defect": defect})


def _pipeline_nmax(surface, kappa, window=CALIBRATION_WINDOW):
    a = surface.radius
    need = int(np.ceil((window[1] + 0.5) * kappa * a)) + 2
    base = surface.n_nodes // 2 if surface.dim == 2 else surface.resolution
    return max(need, base)


@dataclass(eq=False)
class TransmissionSystem:
    """Operators of the transmission problem at one wavenumber.

    Attributes
    ----------
    surface, kappa, Q, representation
    S, K, SQ, KQ : BoundaryOperator
        Single layer and Neumann-Poincare adjoint at ``kappa`` and ``kappa Q``.
    T, L, W, B, A : BoundaryOperator
    c_norm : complex
    calibration : dict
    """

    surface: object
    kappa: float
    Q: float
    representation: str
    S: BoundaryOperator
    K: BoundaryOperator
    SQ: BoundaryOperator
    KQ: BoundaryOperator
    T: BoundaryOperator
    L: BoundaryOperator
    W: BoundaryOperator
    B: BoundaryOperator
    A: BoundaryOperator
    c_norm: complex
    calibration: dict
    events: list = field(default_factory=list)

    @property
    def h(self):
        return 1.0 / self.kappa

    def dispersion(self):
        """(xi, lambda) of A per harmonic order (harmonic representation only)."""
        if self.representation != "harmonic":
            raise CapabilityError("dispersion is defined for harmonic systems")
        orders = np.arange(len(self.A.diagonal))
        return scaled_frequency(self.surface, orders, self.kappa), self.A.diagonal.real.copy()


def build_system(surface, kappa, Q, representation="auto", nmax=None, window=CALIBRATION_WINDOW,
                 threshold=COND_THRESHOLD):
    """Assemble and calibrate all operators at ``kappa``."""
    kappa = check_wavenumber(kappa)
    Q = check_contrast(Q)
    rep = _representation(surface, representation)
    if rep == "harmonic" and nmax is None:
        nmax = _pipeline_nmax(surface, kappa, window)
    S, K = assemble_pair(surface, kappa, rep, nmax)
    SQ, KQ = assemble_pair(surface, kappa * Q, rep, nmax)
    T = _t_from_parts(S, K, SQ, KQ, threshold)
    L = laplace_beltrami_plus_one(surface, rep, nmax=None if rep == "dense" else len(T.diagonal) - 1)
    B, c, report = calibrate_and_build_B(surface, kappa, Q, rep, window=window, T=T, L=L)
    W = report.pop("W")
    A = build_A(B)
    return TransmissionSystem(surface, kappa, Q, rep, S, K, SQ, KQ, T, L, W, B, A, c, report)


def build_system_perturbed(surface, kappa, Q, step=1e-4, max_tries=5, **kw):
    """:func:`build_system` with the perturb-on-breakdown policy.

    If ``S^kappa`` is near singular the wavenumber is shifted by
    ``step * kappa`` (repeatedly if needed) and the event is recorded in
    ``system.events``.
    """
    events = []
    k = float(kappa)
    for _ in range(max_tries):
        try:
            sys_ = build_system(surface, k, Q, **kw)
            sys_.events.extend(events)
            return sys_
        except NearSingularError as err:
            events.append({"event": "S-breakdown", "kappa": err.kappa, "cond": err.cond,
                           "shifted_to": k + step * kappa})
            logger.info("S breakdown at kappa=%.10g, shifting", err.kappa)
            k += step * kappa
    raise NearSingularError(k, np.inf, "repeated single-layer breakdowns")


# ---------------------------------------------------------------------------
# eigenvalue windows

@dataclass(eq=False)
class EigenPairSet:
    """Eigenpairs of A sorted by decreasing eigenvalue.

    Attributes
    ----------
    eigenvalues : ndarray
    epsilon : float
    window : ndarray of int
        Indices ``j`` with ``1 - epsilon <= lambda_j <= 1``.
    vectors : ndarray or None
        Node samples of orthonormal eigendensities (dense path).
    labels : ndarray or None
        Harmonic labels (harmonic path): ``(n, part)`` on circles with part 0
        for cosine and 1 for sine, ``(l, m)`` on spheres.
    """

    eigenvalues: np.ndarray
    epsilon: float
    window: np.ndarray
    system: object
    vectors: np.ndarray = None
    labels: np.ndarray = None

    @property
    def multiplicity(self):
        return int(len(self.window))

    def density(self, j):
        """Node samples of eigendensity ``j`` on the system's surface."""
        if self.vectors is not None:
            return self.vectors[:, j]
        s = self.system.surface
        lab = [tuple(self.labels[j])]
        if s.dim == 2:
            return harmonics.circle_basis(s, lab)[:, 0]
        return harmonics.sphere_basis(s, lab)[:, 0]

    def densities(self, indices=None):
        idx = self.window if indices is None else np.asarray(indices)
        if self.vectors is not None:
            return self.vectors[:, idx]
        s = self.system.surface
        lab = [tuple(l) for l in self.labels[idx]]
        if s.dim == 2:
            return harmonics.circle_basis(s, lab)
        return harmonics.sphere_basis(s, lab)

    def modes(self, indices=None):
        """TransmissionMode objects for the window (or the given indices)."""
        idx = self.window if indices is None else np.asarray(indices)
        out = []
        for j in idx:
            delta = 1.0 - self.eigenvalues[j]
            if self.labels is not None:
                out.append(HarmonicMode(self.system, tuple(int(v) for v in self.labels[j]), delta))
            else:
                out.append(mode_fields(self.system, self.vectors[:, j], delta=delta))
        return out


def eig_window(A, epsilon, system=None):
    """Full Hermitian eigendecomposition of ``A`` and the window ``[1-eps, 1]``.

    Parameters
    ----------
    A : BoundaryOperator
        From :func:`build_A`.
    epsilon : float
        Window parameter, ``0 <= epsilon < 1``.
    system : TransmissionSystem, optional
        Attached to the result so that modes can be constructed.
    """
    eps = check_epsilon(epsilon)
    if A.is_dense:
        Ah = A.meta["hermitian"]
        lam, psi = np.linalg.eigh(Ah)
        order = np.argsort(-lam, kind="stable")
        lam, psi = lam[order], psi[:, order]
        vec = psi / np.sqrt(A.surface.weights)[:, None]
        win = np.flatnonzero((lam >= 1 - eps) & (lam <= 1 + 1e-9))
        return EigenPairSet(lam, eps, win, system, vectors=vec)
    a = A.diagonal.real
    orders = np.arange(len(a))
    if A.surface.dim == 2:
        labs = [(0, 0)] + [(n, p) for n in orders[1:] for p in (0, 1)]
    else:
        labs = [(l, m) for l in orders for m in range(-l, l + 1)]
    labels = np.array(labs, dtype=int)
    lam = a[labels[:, 0]]
    order = np.argsort(-lam, kind="stable")
    lam, labels = lam[order], labels[order]
    win = np.flatnonzero((lam >= 1 - eps) & (lam <= 1 + 1e-9))
    return EigenPairSet(lam, eps, win, system, labels=labels)


# ---------------------------------------------------------------------------
# transmission modes

class TransmissionMode:
    """Exact or generalized transmission eigenpair built from a density.

    Parameters
    ----------
    system : TransmissionSystem
        Supplies ``S``, ``K`` at both wavenumbers (dense representation).
    phi : ndarray
        Node samples of the u-side density, normalized to unit weighted norm.
    delta : float
        ``1 - lambda`` for generalized eigenpairs (0 for exact ones).
    """

    def __init__(self, system, phi, delta=0.0):
        self.system = system
        self.surface = system.surface
        self.kappa, self.Q = system.kappa, system.Q
        phi = np.asarray(phi, dtype=complex)
        self.phi = phi / weighted_norm(self.surface, phi)
        self.delta = float(delta)
        self.varphi = solve_single(system.S, system.SQ.apply(self.phi))
        self.u_trace = system.SQ.apply(self.phi)
        self.v_trace = system.S.apply(self.varphi)
        self.dnu_u = 0.5 * self.phi + system.KQ.apply(self.phi)
        self.dnu_v = 0.5 * self.varphi + system.K.apply(self.varphi)

    @property
    def residual(self):
        """rho = || d_nu u - d_nu v || on the boundary (weighted L2)."""
        return weighted_norm(self.surface, self.dnu_u - self.dnu_v)

    @property
    def trace_mismatch(self):
        return weighted_norm(self.surface, self.u_trace - self.v_trace) / weighted_norm(self.surface, self.u_trace)

    def u(self, points, r_min=None, upsample=1):
        return eval_potential(self.surface, self.phi, points, self.kappa * self.Q, r_min=r_min, upsample=upsample)

    def v(self, points, r_min=None, upsample=1):
        return eval_potential(self.surface, self.varphi, points, self.kappa, r_min=r_min, upsample=upsample)

    def grad_u(self, points, r_min=None, upsample=1):
        return eval_potential(self.surface, self.phi, points, self.kappa * self.Q, "gradient", r_min, upsample=upsample)

    def grad_v(self, points, r_min=None, upsample=1):
        return eval_potential(self.surface, self.varphi, points, self.kappa, "gradient", r_min, upsample=upsample)

    def field(self, which, points, gradient=False):
        f = {"u": (self.u, self.grad_u), "v": (self.v, self.grad_v)}[which]
        return f[1](points) if gradient else f[0](points)

    def boundary_gradient_sq(self, which):
        """|grad zeta|^2 on the boundary from inside (tangential + normal parts)."""
        s = self.surface
        if s.dim != 2:
            raise CapabilityError("dense boundary gradients are implemented for curves")
        trace = self.u_trace if which == "u" else self.v_trace
        dn = self.dnu_u if which == "u" else self.dnu_v
        k = np.fft.fftfreq(s.n_nodes, 1.0 / s.n_nodes)
        k[s.n_nodes // 2] = 0
        dt = np.fft.ifft(1j * k * np.fft.fft(trace)) / s.speed
        return np.abs(dt) ** 2 + np.abs(dn) ** 2

    def boundary_trace(self, which):
        return self.u_trace if which == "u" else self.v_trace


def mode_fields(system, phi, delta=0.0):
    """Build a :class:`TransmissionMode` from a u-side density."""
    if system.representation != "dense":
        raise CapabilityError("mode_fields on node samples needs a dense system; use HarmonicMode")
    return TransmissionMode(system, phi, delta)


class HarmonicMode:
    """Transmission mode on a circle or sphere for one real harmonic.

    The u-side density is ``Y/a`` (sphere) or the normalized cosine/sine
    (circle); fields separate as radial factor times angular harmonic:
    ``u = s^{kQ} J(kQ r)/J(kQ a) Y`` and ``v = s^{kQ} J(k r)/J(k a) Y`` with
    cylinder (circle) or spherical (sphere) Bessel functions.
    """

    def __init__(self, system, label, delta=0.0):
        self.system = system
        self.surface = system.surface
        self.kappa, self.Q = system.kappa, system.Q
        self.label = tuple(label)
        self.order = int(label[0])
        self.delta = float(delta)
        n = self.order
        self.s_Q = complex(system.SQ.diagonal[n])
        self.s_k = complex(system.S.diagonal[n])
        self.dnu_u_coef = complex(0.5 + system.KQ.diagonal[n])
        self.dnu_v_coef = complex((0.5 + system.K.diagonal[n]) * self.s_Q / self.s_k)
        a = self.surface.radius
        # amplitude of the normalized angular factor
        if self.surface.dim == 2:
            self.norm = 1.0 / np.sqrt(2 * np.pi * a) if n == 0 else 1.0 / np.sqrt(np.pi * a)
        else:
            self.norm = 1.0 / a

    @property
    def residual(self):
        return abs(self.dnu_u_coef - self.dnu_v_coef)

    @property
    def trace_mismatch(self):
        return 0.0

    def _radial(self, kind, r, deriv=False):
        from scipy import special
        k = self.kappa * (self.Q if kind == "u" else 1.0)
        a = self.surface.radius
        n = self.order
        if self.surface.dim == 2:
            f, df = special.jv, special.jvp
        else:
            def f(nn, x):
                return special.spherical_jn(nn, x)

            def df(nn, x):
                return special.spherical_jn(nn, x, derivative=True)
        base = f(n, k * a)
        val = self.s_Q * f(n, k * r) / base
        if not deriv:
            return val
        return val, self.s_Q * k * df(n, k * r) / base

    def radial(self, which, r):
        """Radial factor and derivative of u or v (angular factor excluded)."""
        return self._radial(which, np.asarray(r, dtype=float), deriv=True)

    def _angular(self, pts):
        s = self.surface
        if s.dim == 2:
            th = np.arctan2(pts[:, 1], pts[:, 0])
            n, part = self.label
            if part == 0:
                f, g = np.cos(n * th), -np.sin(n * th)
            else:
                f, g = np.sin(n * th), np.cos(n * th)
            return self.norm * f, self.norm * n * g, th
        r, th, ph = harmonics.spherical_coords(pts)
        l, m = self.label
        Y = harmonics.real_sph_harm(l, m, th, ph)
        return self.norm * Y, (th, ph), None

    def field(self, which, points, gradient=False):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        if np.any(r > self.surface.radius * (1 + 1e-12)):
            raise DomainError("harmonic mode fields are evaluated inside the domain")
        if not gradient:
            ang = self._angular(pts)[0]
            return self._radial(which, r) * ang
        f, df = self._radial(which, r, deriv=True)
        if self.surface.dim == 2:
            ang, dang, th = self._angular(pts)
            rhat = np.column_stack([np.cos(th), np.sin(th)])
            that = np.column_stack([-np.sin(th), np.cos(th)])
            return (df * ang)[:, None] * rhat + (f * dang / r)[:, None] * that
        l, m = self.label
        _, th, ph = harmonics.spherical_coords(pts)
        Y = harmonics.real_sph_harm(l, m, th, ph) * self.norm
        gt, gp = harmonics.real_sph_harm_grad(l, m, th, ph)
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        rhat = np.column_stack([st * cp, st * sp, ct])
        that = np.column_stack([ct * cp, ct * sp, -st])
        phat = np.column_stack([-sp, cp, np.zeros_like(sp)])
        return ((df * Y)[:, None] * rhat + (f / r * gt * self.norm)[:, None] * that
                + (f / (r * st) * gp * self.norm)[:, None] * phat)

    def u(self, points):
        return self.field("u", points)

    def v(self, points):
        return self.field("v", points)

    def grad_u(self, points):
        return self.field("u", points, gradient=True)

    def grad_v(self, points):
        return self.field("v", points, gradient=True)

    def angular_integrals(self, gamma):
        """(int gamma |Y|^2, int gamma |grad_angular Y|^2) over the unit circle/sphere.

        ``Y`` includes the density normalization; for ``gamma = 1`` the
        integrals are known in closed form.
        """
        s = self.surface
        n = self.order
        a = s.radius
        if gamma is None or gamma.is_constant:
            base = self.norm**2 * (2 * np.pi if (s.dim == 2 and n == 0) else (np.pi if s.dim == 2 else 1.0))
            if s.dim == 3:
                return base, base * n * (n + 1)
            return base, base * n * n
        # |Y|^2 oscillates with frequency 2n across the support
        n_polar = 128 + int(np.ceil(2 * n * min(gamma.width, 2 * np.pi) / np.pi))
        if s.dim == 2:
            pts, gw = gamma.support_rule(2, n_polar)
            ang, dang, _ = self._angular(pts)
            return float(np.sum(gw * ang**2)), float(np.sum(gw * dang**2))
        pts, gw = gamma.support_rule(3, n_polar, 4 * n + 16)
        _, theta, phi = harmonics.spherical_coords(pts)
        l, m = self.label
        Y = harmonics.real_sph_harm(l, m, theta, phi) * self.norm
        gt, gp = harmonics.real_sph_harm_grad(l, m, theta, phi)
        with np.errstate(invalid="ignore", divide="ignore"):
            grad2 = (gt**2 + np.where(np.sin(theta) > 0, gp / np.sin(theta), 0) ** 2) * self.norm**2
        return float(np.sum(gw * Y**2)), float(np.sum(gw * grad2))


# ---------------------------------------------------------------------------
# exact eigenvalues

@dataclass
class EigenSearchResult:
    values: list
    orders: list
    residuals: list
    events: list


def _golden(f, a, m, b, xtol=1e-9):
    res = minimize_scalar(f, bracket=(a, m, b), method="golden", options={"xtol": xtol / max(abs(m), 1.0)})
    return float(res.x), float(res.fun)


def _circle_t(surface, kappa, Q, nmax):
    """Per-order T multipliers and block-system determinants on a circle.

    Returns ``t`` (the multipliers of T), ``beta`` (the normalized determinant
    of the 2x2 block system ``[S^kQ, -S^k; 1/2 + K*^kQ, -(1/2 + K*^k)]`` per
    order, which vanishes exactly where ``t`` does while ``S^k`` is
    invertible, but has no poles) and ``|s|`` for the condition check.
    """
    s, k = circulant_symbols(surface, kappa)
    sq, kq = circulant_symbols(surface, kappa * Q)
    s, k, sq, kq = s[: nmax + 1], k[: nmax + 1], sq[: nmax + 1], kq[: nmax + 1]
    t = (0.5 + kq) - (0.5 + k) * sq / s
    p1, p2 = s * (0.5 + kq), sq * (0.5 + k)
    beta = np.abs(p1 - p2) / (np.abs(p1) + np.abs(p2))
    return t, beta, np.abs(s)


def search_exact_eigenvalues(surface, Q, kappa_range, scan_step=None, method="auto",
                             accept=1e-6, bracket_level=0.9, threshold=COND_THRESHOLD, perturb=1e-4):
    """Locate real transmission eigenvalues by minimizing ``sigma_min(T)``.

    Parameters
    ----------
    surface : BoundarySurface
        A curve (the dense Kress discretization is used).
    Q : float
    kappa_range : (float, float)
    scan_step : float, optional
        Default ``(kmax - kmin) / 2000``.
    method : {"auto", "dense", "circulant"}
        ``"circulant"`` (default on circles) exploits that the Nystrom
        matrices on a circle are circulant, so the singular values of T are
        the ``|t_n|`` and each order is scanned separately; this resolves
        crossings of different orders.
    accept : float
        Accept a refined minimum iff ``sigma_min <= accept * ||T||``.
    bracket_level : float
        Local minima of the normalized scan function above this level are
        not refined.

    Returns
    -------
    EigenSearchResult
    """
    Q = check_contrast(Q)
    lo, hi = check_kappa_range(kappa_range)
    if surface.dim != 2:
        raise CapabilityError("exact eigenvalue search is implemented for curves")
    step = (hi - lo) / 2000 if scan_step is None else check_positive(scan_step, "scan_step")
    grid = np.arange(lo, hi + 0.5 * step, step)
    if method == "auto":
        method = "circulant" if surface.is_circle else "dense"
    events = []
    # interior wavelength 2 pi / (kappa Q); fewer nodes than this misplaces high orders
    needed = 4 * hi * Q * surface.weights.sum() / (2 * np.pi) + 20
    if surface.n_nodes < needed:
        events.append({"event": "under-resolved", "kappa": float(hi), "needed_nodes": int(np.ceil(needed))})
    if method == "circulant":
        return _search_circulant(surface, Q, grid, accept, bracket_level, threshold, events)
    return _search_dense(surface, Q, grid, accept, bracket_level, threshold, perturb, events)


def _search_circulant(surface, Q, grid, accept, level, threshold, events):
    nmax = surface.n_nodes // 2 - 1
    tab = np.empty((len(grid), nmax + 1))
    dtn = np.empty((len(grid), nmax + 1))
    for i, k in enumerate(grid):
        s, kk = circulant_symbols(surface, k)
        sq, kq = circulant_symbols(surface, k * Q)
        s, kk, sq, kq = s[: nmax + 1], kk[: nmax + 1], sq[: nmax + 1], kq[: nmax + 1]
        sabs = np.abs(s)
        if sabs.max() / sabs.min() > threshold:
            events.append({"event": "S-breakdown", "kappa": float(k), "cond": float(sabs.max() / sabs.min())})
        p1, p2 = s * (0.5 + kq), sq * (0.5 + kk)
        tab[i] = np.abs(p1 - p2) / (np.abs(p1) + np.abs(p2))
        # difference of the two interior Dirichlet-to-Neumann symbols, real up to quadrature error
        dtn[i] = ((0.5 + kq) / sq - (0.5 + kk) / s).real
    values, orders, resid = [], [], []
    for n in range(nmax + 1):
        col, g = tab[:, n], dtn[:, n]
        cands = []
        idx = np.flatnonzero((col[1:-1] < col[:-2]) & (col[1:-1] <= col[2:]) & (col[1:-1] < level)) + 1
        for i in idx:
            def f(k, n=n):
                return _circle_t(surface, k, Q, n)[1][n]
            k0, k2 = grid[i - 1], grid[i + 1]
            kstar, _ = _golden(f, k0, grid[i], k2)
            if k0 <= kstar <= k2:
                cands.append(kstar)
        # narrow dips can fall between scan points; a sign change still brackets them
        for i in np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0):
            def h(k, n=n):
                sn, kn = circulant_symbols(surface, k)
                sqn, kqn = circulant_symbols(surface, k * Q)
                return ((0.5 + kqn[n]) / sqn[n] - (0.5 + kn[n]) / sn[n]).real
            kstar = brentq(h, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15)
            if not any(abs(kstar - c) < 1e-7 for c in cands):
                cands.append(kstar)
        for kstar in cands:
            t, beta, sabs = _circle_t(surface, kstar, Q, nmax)
            if sabs.max() / sabs.min() > threshold:
                events.append({"event": "S-breakdown", "kappa": kstar, "cond": float(sabs.max() / sabs.min())})
                continue
            rel = abs(t[n]) / np.abs(t).max()
            if rel <= accept and beta[n] <= accept:
                values.append(kstar)
                orders.append(n)
                resid.append(rel)
    order = np.argsort(values, kind="stable")
    return EigenSearchResult([values[i] for i in order], [orders[i] for i in order],
                             [resid[i] for i in order], events)


def _sigma_dense(surface, kappa, Q, threshold, L=None):
    """Scan function of the dense search and the acceptance ratio of T.

    ``T`` smooths like ``(-Delta + 1)^{-1}`` and has rank-one poles where
    ``S^kappa`` is singular, so ``sigma_min(T)/||T||`` both sinks with N and
    dips spuriously at those poles.  The scan therefore uses
    ``sigma_min(L T) / median sigma(L T)`` (weighted frame), which has an
    N-independent floor and ignores rank-one poles; candidates must also pass
    ``sigma_min(T) <= accept * ||T||``.

    Returns
    -------
    (scan value, sigma_min(T)/||T||); ``(inf, inf)`` on a breakdown.
    """
    try:
        T = build_T(surface, kappa, Q, "dense", threshold=threshold)
    except NearSingularError:
        return np.inf, np.inf
    if L is None:
        L = laplace_beltrami_plus_one(surface, "dense")
    LT = BoundaryOperator("LT", kappa, surface, "dense", matrix=L.matrix @ T.matrix)
    sl = np.linalg.svd(_weighted_hermitian(LT), compute_uv=False)
    st = np.linalg.svd(_weighted_hermitian(T), compute_uv=False)
    return sl[-1] / np.median(sl), st[-1] / st[0]


def _search_dense(surface, Q, grid, accept, level, threshold, perturb, events):
    L = laplace_beltrami_plus_one(surface, "dense")
    sig = np.empty(len(grid))
    for i, k in enumerate(grid):
        sig[i], _ = _sigma_dense(surface, k, Q, threshold, L)
        if not np.isfinite(sig[i]):
            events.append({"event": "S-breakdown", "kappa": float(k), "cond": np.inf})
            sig[i], _ = _sigma_dense(surface, k + perturb * k, Q, threshold, L)
    values, resid = [], []
    idx = np.flatnonzero((sig[1:-1] < sig[:-2]) & (sig[1:-1] <= sig[2:]) & (sig[1:-1] < level)) + 1
    for i in idx:
        kstar, g = _golden(lambda k: _sigma_dense(surface, k, Q, threshold, L)[0],
                           grid[i - 1], grid[i], grid[i + 1])
        if not grid[i - 1] <= kstar <= grid[i + 1]:
            continue
        _, trel = _sigma_dense(surface, kstar, Q, threshold, L)
        if g <= accept and trel <= accept:
            values.append(kstar)
            resid.append(trel)
    return EigenSearchResult(values, [None] * len(values), resid, events)


def find_exact_eigenvalues(surface, Q, kappa_range, scan_step=None, **kw):
    """Sorted list of real transmission eigenvalues in ``kappa_range``.

    See :func:`search_exact_eigenvalues` for the options.
    """
    return search_exact_eigenvalues(surface, Q, kappa_range, scan_step, **kw).values


def exact_mode(surface, Q, kappa):
    """Transmission mode from the null vector of ``T`` at an exact eigenvalue.

    Uses the dense discretization; the density is the right singular vector
    of the smallest singular value (weighted frame).
    """
    kappa = check_wavenumber(kappa)
    Q = check_contrast(Q)
    S, K = assemble_pair(surface, kappa, "dense")
    SQ, KQ = assemble_pair(surface, kappa * Q, "dense")
    T = _t_from_parts(S, K, SQ, KQ)
    _, sv, vh = np.linalg.svd(_weighted_hermitian(T))
    phi = vh[-1].conj() / np.sqrt(surface.weights)
    nan = BoundaryOperator("none", kappa, surface, "dense", matrix=np.zeros((1, 1)))
    system = TransmissionSystem(surface, kappa, Q, "dense", S, K, SQ, KQ, T, nan, nan, nan, nan,
                                np.nan, {})
    mode = TransmissionMode(system, phi, delta=0.0)
    mode.sigma_min = float(sv[-1] / sv[0])
    return mode
