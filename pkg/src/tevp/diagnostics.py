"""Observables of generalized transmission eigenfunctions.

Averaging functionals over eigenvalue windows, Weyl counts, log-log scaling
fits, a quantum-variance statistic and numerical checks of the leading
symbols of the boundary operators.
"""
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .exceptions import CapabilityError, DomainError, FitError, ResolutionError, UndefinedAverageError
from .geometry import BoundarySurface, BumpFunction, InteriorSurface, distance_to_boundary, offset_surface
from .layerpot import _harmonic_values
from .oracle import RadialMode, radial_mode_eval
from .spectral import (CALIBRATION_WINDOW, EigenPairSet, HarmonicMode, TransmissionMode, build_system_perturbed,
                       eig_window, scaled_frequency)
from ._validation import check_contrast, check_epsilon, check_positive, check_wavenumber

logger = logging.getLogger(__name__)

SYMBOL_WINDOW = (6.0, 16.0)


# ---------------------------------------------------------------------------
# averaging functionals

def _as_modes(modes):
    if isinstance(modes, EigenPairSet):
        return modes.modes()
    if isinstance(modes, (TransmissionMode, HarmonicMode, RadialMode)):
        return [modes]
    return list(modes)


def _target_radius_scale(mode, target):
    """Scale factor of the target surface relative to the boundary."""
    if target is None or target == "boundary" or isinstance(target, BoundarySurface):
        return 1.0
    if isinstance(target, InteriorSurface):
        return target.scale
    raise DomainError(f"unknown target {target!r}")


def _radial_mode_integral(mode, scale, gamma, order, which):
    # RadialMode: angular factor exp(i n theta), |Y| = 1
    if mode.d != 2:
        raise CapabilityError("oracle-mode functionals are implemented on the disk")
    r = scale * mode.a
    if gamma is None or gamma.is_constant:
        M = max(256, 16 * mode.order + 64)
        th = 2 * np.pi * np.arange(M) / M
        unit = np.column_stack([np.cos(th), np.sin(th)])
        w = np.full(M, 2 * np.pi / M)
    else:
        unit, w = gamma.support_rule(2, 128 + 4 * mode.order)
    u, v, gu, gv = radial_mode_eval(mode, r * unit)
    f, g = (u, gu) if which == "u" else (v, gv)
    dens = np.abs(f) ** 2 if order == 0 else (np.abs(g) ** 2).sum(1)
    return float(np.sum(w * dens) * r)


def _harmonic_mode_integral(mode, scale, gamma, order, which):
    a = mode.surface.radius
    r = scale * a
    f, df = mode.radial(which, r)
    ang0, ang1 = mode.angular_integrals(gamma)
    jac = r ** (mode.surface.dim - 1)
    if order == 0:
        return float(abs(f) ** 2 * ang0 * jac)
    return float((abs(df) ** 2 * ang0 + abs(f) ** 2 / r**2 * ang1) * jac)


def _dense_mode_integral(mode, target, gamma, order, which):
    s = mode.surface
    if isinstance(target, InteriorSurface):
        pts, w = target.nodes, target.weights
        if order == 0:
            dens = np.abs(mode.field(which, pts)) ** 2
        else:
            dens = (np.abs(mode.field(which, pts, gradient=True)) ** 2).sum(1)
    else:
        pts, w = s.nodes, s.weights
        dens = np.abs(mode.boundary_trace(which)) ** 2 if order == 0 else mode.boundary_gradient_sq(which)
    gam = np.ones(len(pts)) if gamma is None else gamma(pts)
    return float(np.sum(w * gam * dens))


def mode_integral(mode, target="boundary", gamma=None, order=0, which="u"):
    """``int_target gamma |zeta|^2`` (order 0) or ``gamma |grad zeta|^2`` (order 1) for one mode."""
    if order not in (0, 1):
        raise DomainError("order must be 0 or 1")
    if which not in ("u", "v"):
        raise DomainError("which must be 'u' or 'v'")
    if isinstance(mode, RadialMode):
        return _radial_mode_integral(mode, _target_radius_scale(mode, target), gamma, order, which)
    if isinstance(mode, HarmonicMode):
        return _harmonic_mode_integral(mode, _target_radius_scale(mode, target), gamma, order, which)
    return _dense_mode_integral(mode, target, gamma, order, which)


def concentration_functionals(modes, target="boundary", gamma=None, order=0, which="u"):
    """Window average of ``int gamma I^order_zeta`` over a target surface.

    Parameters
    ----------
    modes : EigenPairSet or sequence of modes
        Transmission modes (dense, harmonic or oracle radial modes).
    target : "boundary", BoundarySurface or InteriorSurface
    gamma : BumpFunction, optional
        Weight; ``None`` means 1.
    order : {0, 1}
        0 integrates ``|zeta|^2``, 1 integrates ``|grad zeta|^2``.
    which : {"u", "v"}

    Returns
    -------
    float
        ``(sum_j int gamma |zeta_j|^2) / |J|``.
    """
    ms = _as_modes(modes)
    if not ms:
        raise UndefinedAverageError("empty eigenvalue window: the average is undefined")
    vals = [mode_integral(m, target, gamma, order, which) for m in ms]
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# fits and counts

def scaling_fit(kappas, values):
    """Least-squares line through ``(log kappa, log value)``.

    Returns
    -------
    slope, intercept, stderr : float
    """
    k = np.asarray(kappas, dtype=float)
    v = np.asarray(values, dtype=float)
    if k.shape != v.shape or k.ndim != 1:
        raise FitError("kappas and values must be 1-D of equal length")
    if len(k) < 4:
        raise FitError(f"need at least 4 points for a scaling fit, got {len(k)}")
    if np.any(v <= 0) or np.any(k <= 0) or not np.all(np.isfinite(v)):
        raise FitError("scaling fit needs positive finite values")
    res = stats.linregress(np.log(k), np.log(v))
    return float(res.slope), float(res.intercept), float(res.stderr)


def _weyl_scale(surface, kappa):
    return (2 * np.pi / kappa) ** (surface.dim - 1)


def weyl_count_sweep(surface, Q, epsilon=0.1, kappas=(), **kw):
    """Multiplicities ``m(kappa, eps)`` across a sweep and their log-log slope.

    Returns
    -------
    dict
        ``kappa``, ``m``, ``normalized`` (``(2 pi h)^(d-1) m``), ``slope``,
        ``stderr`` (``None`` with fewer than 4 usable points), ``excluded``
        and ``events``.
    """
    Q = check_contrast(Q)
    eps = check_epsilon(epsilon)
    ks = [check_wavenumber(k) for k in kappas]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise DomainError("kappa list must be increasing")
    ms, events = [], []
    for k in ks:
        system = build_system_perturbed(surface, k, Q, **kw)
        events.extend(system.events)
        ms.append(eig_window(system.A, eps, system).multiplicity)
    ms = np.array(ms, dtype=int)
    ok = ms > 0
    excluded = [k for k, good in zip(ks, ok) if not good]
    for k in excluded:
        logger.info("m(kappa=%g) = 0 excluded from the Weyl fit", k)
    slope = stderr = None
    if ok.sum() >= 4:
        slope, _, stderr = scaling_fit(np.array(ks)[ok], ms[ok])
    return {"kappa": list(ks), "m": ms.tolist(),
            "normalized": [float(_weyl_scale(surface, k) * m) for k, m in zip(ks, ms)],
            "slope": slope, "stderr": stderr, "excluded": excluded, "epsilon": eps, "events": events}


def _require_rotation_invariant(pairs):
    if pairs.labels is None:
        raise CapabilityError("symbol quantization needs a circle or sphere (harmonic eigenpairs)")


def _matrix_elements(pairs, gamma, b):
    """``<Op_a phi_j, phi_j>`` for ``a = gamma(x) b(xi)`` over the window.

    On a circle or sphere each window density is a single real harmonic, so
    the symmetrized quantization reduces to ``b(xi_j) int gamma |phi_j|^2``.
    """
    _require_rotation_invariant(pairs)
    system = pairs.system
    s = system.surface
    out = []
    for j in pairs.window:
        mode = HarmonicMode(system, tuple(int(v) for v in pairs.labels[j]), 1.0 - pairs.eigenvalues[j])
        ang0, _ = mode.angular_integrals(gamma)
        val = ang0 * s.radius ** (s.dim - 1)
        if b is not None:
            val *= float(b(scaled_frequency(s, [mode.order], system.kappa))[0])
        out.append(val)
    return np.array(out)


def _check_separable(b):
    if b is None:
        return None
    if not callable(b):
        raise CapabilityError("frequency factor b must be a callable of the scaled frequency")
    try:
        np.asarray(b(np.array([1.0])), dtype=float)
    except TypeError as err:
        raise CapabilityError("only separable symbols gamma(x) b(xi) are supported") from err
    return b


def generalized_weyl_test(surface, Q, epsilon, kappas, gamma=None, b=None, **kw):
    """``(2 pi h)^(d-1) sum_{j in J} <Op_a phi_j, phi_j>`` for ``a = gamma(x) b(xi)``.

    Parameters
    ----------
    surface : BoundarySurface
        Circle or sphere.
    kappas : float or sequence of float
    gamma : BumpFunction, optional
    b : callable, optional
        Frequency factor of the symbol evaluated at the scaled frequency.

    Returns
    -------
    dict with ``kappa``, ``lhs`` and ``cauchy`` (successive differences).
    """
    if not surface.rotation_invariant:
        raise CapabilityError("generalized Weyl test needs a rotation-invariant surface")
    Q = check_contrast(Q)
    eps = check_epsilon(epsilon)
    b = _check_separable(b)
    ks = np.atleast_1d(np.asarray(kappas, dtype=float))
    lhs = []
    for k in ks:
        system = build_system_perturbed(surface, check_wavenumber(k), Q, **kw)
        pairs = eig_window(system.A, eps, system)
        lhs.append(float(_weyl_scale(surface, k) * _matrix_elements(pairs, gamma, b).sum()))
    return {"kappa": ks.tolist(), "lhs": lhs, "cauchy": np.abs(np.diff(lhs)).tolist()}


def angular_mean(gamma, dim):
    """Mean of ``gamma`` over the unit circle or sphere."""
    if gamma is None or gamma.is_constant:
        return 1.0
    _, w = gamma.support_rule(dim, 256, 64)
    return float(np.sum(w) / (2 * np.pi if dim == 2 else 4 * np.pi))


def quantum_variance(pairs, gamma=None, b=None):
    """``(1/|J|) sum_j |<Op_{a - abar} phi_j, phi_j>|^2`` over the window.

    ``abar`` is the angular mean of ``gamma`` (times ``b``), the invariant
    average for rotation-invariant boundaries.  Dense eigenpairs are accepted
    when ``b`` is ``None``.
    """
    if pairs.multiplicity == 0:
        raise UndefinedAverageError("empty eigenvalue window: the variance is undefined")
    b = _check_separable(b)
    s = pairs.system.surface
    gbar = angular_mean(gamma, s.dim)
    if pairs.labels is None:
        if b is not None:
            raise CapabilityError("frequency factors need harmonic eigenpairs")
        phis = pairs.densities()
        g = np.ones(s.n_nodes) if gamma is None else gamma(s.nodes)
        elem = (s.weights[:, None] * g[:, None] * np.abs(phis) ** 2).sum(0)
        norms = (s.weights[:, None] * np.abs(phis) ** 2).sum(0)
        return float(np.mean(np.abs(elem - gbar * norms) ** 2))
    elem = _matrix_elements(pairs, gamma, None)
    if b is None:
        factor = np.ones(len(elem))
    else:
        labels = pairs.labels[pairs.window]
        factor = np.asarray(b(scaled_frequency(s, labels[:, 0], pairs.system.kappa)), dtype=float)
    # the weighted density norms are 1
    return float(np.mean(np.abs(factor * (elem - gbar)) ** 2))


# ---------------------------------------------------------------------------
# symbols

def _power_fit(xi, y, powers):
    X = np.column_stack([xi ** float(p) for p in powers])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def symbol_check(surface, kappa, Qs=(2.0, 3.0), window=SYMBOL_WINDOW, radii=(1.0, 2.0)):
    """Numerical leading symbols of ``S`` and ``K*`` on a circle or sphere.

    Fits, over scaled frequencies in ``window``:

    * ``kappa s_n(kappa Q) = C xi^-1 + D(Q) xi^-3 + ...``: the exponent of
      ``|kappa s_n(kappa)|``, the leading constant ``C`` per ``Q`` and the
      ratio ``D(Q_2)/D(Q_1)`` against ``(Q_2/Q_1)^2``;
    * ``kappa k_n(kappa) = C_K xi^-3 + ...`` on scaled copies of radius in
      ``radii``; ``C_K`` should scale like the curvature ``1/a``.

    Returns
    -------
    dict
    """
    if not surface.rotation_invariant:
        raise CapabilityError("symbol checks need a circle or sphere")
    kappa = check_wavenumber(kappa)
    lo, hi = window
    if hi < 6:
        raise CapabilityError("symbol checks need scaled frequencies beyond 6")
    from .geometry import circle, sphere
    make = circle if surface.dim == 2 else sphere
    powers = (-1, -3, -5, -7)

    def fit_for(a, k):
        surf = make(a, 16)
        nmax = int(np.ceil(hi * kappa * a)) + 2
        n = np.arange(nmax + 1)
        xi = scaled_frequency(surf, n, kappa)
        sel = (xi >= lo) & (xi <= hi)
        s, kst = _harmonic_values(surf, k, nmax)
        return xi[sel], s[sel], kst[sel]

    a0 = surface.radius
    xi, s1, k1 = fit_for(a0, kappa)
    exponent = float(np.polyfit(np.log(xi), np.log(np.abs(kappa * s1)), 1)[0])
    lead, sub = {}, {}
    for Q in (1.0,) + tuple(float(q) for q in Qs):
        xq, sq, _ = fit_for(a0, kappa * Q)
        c = _power_fit(xq, (kappa * sq).real, powers)
        lead[Q], sub[Q] = float(c[0]), float(c[1])
    q1, q2 = float(Qs[0]), float(Qs[1])
    ratio = sub[q2] / sub[q1]
    expected = (q2 / q1) ** 2
    kfit = {}
    for a in radii:
        xa, _, ka = fit_for(a, kappa)
        kfit[float(a)] = float(_power_fit(xa, (kappa * ka).real, (-3, -5, -7))[0])
    r0, r1 = float(radii[0]), float(radii[1])
    kratio = kfit[r0] / kfit[r1]
    return {
        "kappa": kappa, "window": (lo, hi),
        "S_exponent": exponent,
        "S_leading": lead, "S_subleading": sub,
        "subleading_ratio": ratio, "subleading_expected": expected,
        "subleading_rel_error": abs(ratio / expected - 1),
        "K_leading": kfit, "K_ratio": kratio, "K_expected": r1 / r0,
        "K_rel_error": abs(kratio / (r1 / r0) - 1),
    }


def hamiltonian_check(surface, kappa, Q, window=CALIBRATION_WINDOW, **kw):
    """Empirical dispersion ``lambda(xi)`` of ``A`` and its power-law fits.

    Two readings of the principal part are fitted over ``window``:
    ``"lambda"`` fits ``lambda ~ c xi^p`` and ``"one_minus_lambda"`` fits
    ``1 - lambda ~ c xi^p``.  The reading whose exponent is closest to -2 is
    reported as ``matching``.
    """
    if not surface.rotation_invariant:
        raise CapabilityError("Hamiltonian check needs a circle or sphere")
    kappa = check_wavenumber(kappa)
    if kw.get("nmax") is not None and scaled_frequency(surface, [kw["nmax"]], kappa)[0] < 6:
        raise CapabilityError("insufficient frequency range (scaled frequency below 6)")
    system = build_system_perturbed(surface, kappa, Q, **kw)
    xi, lam = system.dispersion()
    lo, hi = window
    sel = (xi >= lo) & (xi <= hi)
    readings = {}
    for name, y in (("lambda", lam[sel]), ("one_minus_lambda", 1 - lam[sel])):
        sign = float(np.sign(np.median(y)))
        if np.any(y * sign <= 0):
            readings[name] = {"p": None, "c": None, "sign": sign}
            continue
        p, logc = np.polyfit(np.log(xi[sel]), np.log(sign * y), 1)
        readings[name] = {"p": float(p), "c": float(sign * np.exp(logc)), "sign": sign}
    valid = {k: v for k, v in readings.items() if v["p"] is not None}
    matching = min(valid, key=lambda k: abs(valid[k]["p"] + 2)) if valid else None
    return {"kappa": system.kappa, "Q": system.Q, "window": (lo, hi), "readings": readings,
            "matching": matching, "calibration_c2": complex(system.calibration["c2"]),
            "xi": xi.tolist(), "lambda": lam.tolist()}


# ---------------------------------------------------------------------------
# collar energy

def collar_energy(mode, width, which="u", n_radial=None, n_angular=None):
    """Fraction of ``int_D |zeta|^2`` within distance ``width`` of the boundary.

    Harmonic and oracle modes on disks/balls separate, so only the radial
    integral is sampled (Gauss-Legendre); dense modes on star-shaped curves
    use a polar grid ``s x(t)``.

    Raises
    ------
    ResolutionError
        If the sampling grid has fewer than 6 points per interior wavelength.
    """
    width = float(width)
    if width < 0:
        raise DomainError("collar width must be nonnegative")
    if isinstance(mode, RadialMode):
        a, d, kQ = mode.a, mode.d, mode.kappa * mode.Q
    elif isinstance(mode, HarmonicMode):
        a, d, kQ = mode.surface.radius, mode.surface.dim, mode.kappa * mode.Q
    else:
        return _collar_dense(mode, width, which, n_radial, n_angular)
    if width <= 0:
        return 0.0
    if width >= a:
        return 1.0
    wl = 2 * np.pi / kQ
    n_radial = int(np.ceil(6 * a / wl)) + 32 if n_radial is None else int(n_radial)
    if a / n_radial > wl / 6:
        raise ResolutionError(f"{n_radial} radial points do not resolve wavelength {wl:.3g}")

    def energy(r0, r1):
        x, w = np.polynomial.legendre.leggauss(n_radial)
        r = 0.5 * (r1 - r0) * x + 0.5 * (r1 + r0)
        w = 0.5 * (r1 - r0) * w
        if isinstance(mode, RadialMode):
            pts = np.column_stack([r, np.zeros_like(r)]) if d == 2 else np.column_stack([r, 0 * r, 0 * r])
            u, v, _, _ = radial_mode_eval(mode, pts)
            f = u if which == "u" else v
        else:
            f = mode.radial(which, r)[0]
        return float(np.sum(w * np.abs(f) ** 2 * r ** (d - 1)))

    inner, outer = energy(0, a - width), energy(a - width, a)
    return outer / (inner + outer)


def _collar_dense(mode, width, which, n_radial, n_angular):
    s = mode.surface
    if s.dim != 2:
        raise CapabilityError("dense collar energies are implemented for curves")
    if width <= 0:
        return 0.0
    if width >= s.diameter:
        return 1.0
    kQ = mode.kappa * mode.Q
    wl = 2 * np.pi / kQ
    rmax = float(np.linalg.norm(s.nodes, axis=1).max())
    n_radial = int(np.ceil(6 * rmax / wl)) + 16 if n_radial is None else int(n_radial)
    n_angular = s.n_nodes if n_angular is None else int(n_angular)
    if rmax / n_radial > wl / 6 or s.measure / n_angular > wl / 6:
        raise ResolutionError("polar grid does not resolve the interior wavelength")
    if n_angular != s.n_nodes:
        raise DomainError("dense collar grid uses the boundary nodes as angular samples")
    x, w = np.polynomial.legendre.leggauss(n_radial)
    sr, sw = 0.5 * (x + 1), 0.5 * w
    # area element of (s, t) -> s x(t) is s |x(t) x x'(t)| ds dt
    cross = np.abs(s.nodes[:, 0] * s.dx[:, 1] - s.nodes[:, 1] * s.dx[:, 0])
    dt = 2 * np.pi / s.n_nodes
    pts = (sr[:, None, None] * s.nodes[None]).reshape(-1, 2)
    wts = (sw[:, None] * sr[:, None] * cross[None] * dt).ravel()
    vals = np.abs(mode.field(which, pts) if isinstance(mode, HarmonicMode)
                  else (mode.u if which == "u" else mode.v)(pts, r_min=0.0)) ** 2
    dist = distance_to_boundary(s, pts)
    total = np.sum(wts * vals)
    return float(np.sum((wts * vals)[dist <= width]) / total)


# ---------------------------------------------------------------------------
# reports

@dataclass
class ConcentrationReport:
    """Per-wavenumber concentration records and fitted slopes.

    ``records`` holds one dict per ``(kappa, target, zeta, order)`` with the
    functional value; ``multiplicity`` and ``collar`` are per wavenumber.
    """

    config: dict
    records: list = field(default_factory=list)
    multiplicity: dict = field(default_factory=dict)
    collar: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)
    events: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2, default=_json_default)

    def rows(self):
        return [(r["kappa"], r["target"], r["zeta"], r["order"], r["value"]) for r in self.records]

    @classmethod
    def merge(cls, reports):
        """Combine per-wavenumber reports (in the given order) and refit slopes."""
        reports = list(reports)
        out = cls(config=dict(reports[0].config) if reports else {})
        for r in reports:
            out.records.extend(r.records)
            out.multiplicity.update(r.multiplicity)
            out.collar.update(r.collar)
            out.events.extend(r.events)
        out.records.sort(key=lambda r: (r["kappa"], r["target"], r["zeta"], r["order"]))
        out.fit_slopes()
        return out

    def fit_slopes(self):
        keys = sorted({(r["target"], r["zeta"], r["order"]) for r in self.records})
        self.slopes = {}
        for target, zeta, order in keys:
            ks, vals = self.series(target, zeta, order)
            try:
                slope, icpt, se = scaling_fit(ks, vals)
            except FitError:
                slope = icpt = se = None
            self.slopes[f"{target}/{zeta}/I{order}"] = {"slope": slope, "intercept": icpt, "stderr": se}
        return self.slopes

    def series(self, target, zeta, order):
        sel = [r for r in self.records if r["target"] == target and r["zeta"] == zeta and r["order"] == order]
        sel.sort(key=lambda r: r["kappa"])
        return np.array([r["kappa"] for r in sel]), np.array([r["value"] for r in sel])


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _targets(surface, R_fractions):
    from .geometry import distance_to_origin
    rho0 = distance_to_origin(surface)
    targets = {"boundary": "boundary"}
    for f in R_fractions:
        targets[f"R={f:g}rho0"] = offset_surface(surface, f * rho0)
    return targets, rho0


def concentration_sweep(surface, Q, epsilon=0.1, kappas=(), gamma=None, R_fractions=(0.2, 0.4, 0.6),
                        collar_width=None, fit=True, **kw):
    """Concentration functionals across a wavenumber sweep.

    Parameters
    ----------
    R_fractions : sequence of float
        Interior targets at ``R = f * rho_0``.
    collar_width : callable or float, optional
        Width of the collar; a callable receives ``kappa``.  Default ``3/kappa``.
    fit : bool
        Fit log-log slopes (needs at least 4 wavenumbers per series).
    """
    Q = check_contrast(Q)
    eps = check_epsilon(epsilon)
    gamma = BumpFunction() if gamma is None else gamma
    targets, rho0 = _targets(surface, R_fractions)
    report = ConcentrationReport(config={
        "surface": surface.descriptor(), "Q": Q, "epsilon": eps, "gamma": gamma.descriptor(),
        "R_fractions": list(R_fractions), "rho0": rho0})
    for k in kappas:
        system = build_system_perturbed(surface, check_wavenumber(k), Q, **kw)
        report.events.extend(system.events)
        pairs = eig_window(system.A, eps, system)
        report.multiplicity[float(k)] = pairs.multiplicity
        if pairs.multiplicity == 0:
            logger.info("empty window at kappa=%g", k)
            continue
        modes = pairs.modes()
        for name, tgt in targets.items():
            for zeta in ("u", "v"):
                for order in (0, 1):
                    val = concentration_functionals(modes, tgt, gamma, order, zeta)
                    report.records.append({"kappa": float(k), "target": name, "zeta": zeta,
                                           "order": order, "value": val})
        w = 3.0 / k if collar_width is None else (collar_width(k) if callable(collar_width) else collar_width)
        report.collar[float(k)] = float(np.mean([collar_energy(m, w) for m in modes]))
    if fit:
        report.fit_slopes()
    return report
