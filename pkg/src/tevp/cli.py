"""Command-line driver: ``tevp <command> --config path.json [--out dir] [--workers n]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import ConfigError, TevpError
from .geometry import BumpFunction, build_surface

logger = logging.getLogger("tevp")

COMMANDS = ("eigs", "modes", "concentrate", "weyl", "variance", "symbols", "scatter", "oracle")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    """Validated run configuration.

    ``kappa`` is either ``{"min", "max", "count"}`` (linear sweep, or the
    search range for ``eigs`` / ``oracle``) or ``{"list": [...]}``.
    """

    shape: dict
    Q: float
    epsilon: float = 0.1
    kappa: dict = field(default_factory=dict)
    resolution: int = None
    R: list = field(default_factory=lambda: [0.2, 0.4, 0.6])
    bump: dict = None
    options: dict = field(default_factory=dict)
    out: str = "tevp_out"
    workers: int = None
    seed: int = 0
    d: int = None

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        for req in ("shape", "Q", "kappa"):
            if req not in raw:
                raise ConfigError(f"missing required field '{req}'")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        if not isinstance(self.shape, dict) or "kind" not in self.shape:
            raise ConfigError("shape: expected an object with a 'kind'")
        kind = self.shape["kind"]
        dim = 3 if kind in ("sphere", "ellipsoid") else 2
        if self.d is not None and self.d != dim:
            raise ConfigError(f"d: shape {kind!r} has dimension {dim}, config says {self.d}")
        self.d = dim
        try:
            self.Q = float(self.Q)
        except (TypeError, ValueError):
            raise ConfigError(f"Q: not a number ({self.Q!r})") from None
        if not self.Q > 0 or abs(self.Q - 1) < 1e-12:
            raise ConfigError(f"Q: must be positive and different from 1, got {self.Q}")
        if not (isinstance(self.epsilon, (int, float)) and 0 < self.epsilon <= 0.5):
            raise ConfigError(f"epsilon: must lie in (0, 0.5], got {self.epsilon!r}")
        ks = self.kappas()
        if not ks or any(not (np.isfinite(k) and k > 0) for k in ks):
            raise ConfigError("kappa: values must be positive")
        if any(not 0 < r < 1 for r in self.R):
            raise ConfigError("R: fractions of rho_0 must lie in (0, 1)")
        if self.workers is not None and (not isinstance(self.workers, int) or self.workers < 1):
            raise ConfigError("workers: must be a positive integer")
        try:
            probe = build_surface(self.shape, 64 if dim == 2 else 8)
        except TevpError as err:
            raise ConfigError(f"shape: {err}") from None
        if self.resolution is not None:
            if dim == 2:
                need = 8 * max(ks) * probe.diameter
                if self.resolution < need:
                    raise ConfigError(f"resolution: N={self.resolution} below 8*kappa*diam={need:.0f}")
            elif self.resolution < 8:
                raise ConfigError("resolution: L must be at least 8")
        if self.bump is not None and not isinstance(self.bump, dict):
            raise ConfigError("bump: expected an object with 'center' and 'width' or null")

    def kappas(self):
        k = self.kappa
        if not isinstance(k, dict):
            raise ConfigError("kappa: expected an object")
        if "list" in k:
            return [float(v) for v in k["list"]]
        try:
            lo, hi = float(k["min"]), float(k["max"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("kappa: needs 'list' or 'min'/'max'") from None
        if hi < lo:
            raise ConfigError("kappa: max < min")
        n = int(k.get("count", 2))
        if n < 1:
            raise ConfigError("kappa: count must be positive")
        return [lo] if n == 1 else np.linspace(lo, hi, n).tolist()

    def kappa_range(self):
        ks = self.kappas()
        if "list" in self.kappa:
            return min(ks), max(ks)
        return float(self.kappa["min"]), float(self.kappa["max"])

    def surface(self, kappa_max=None):
        """Boundary at the configured (or default) resolution."""
        if self.resolution is not None:
            return build_surface(self.shape, self.resolution)
        if self.d == 3:
            return build_surface(self.shape, 16)
        probe = build_surface(self.shape, 64)
        kmax = max(self.kappas()) if kappa_max is None else kappa_max
        rmax = float(np.linalg.norm(probe.nodes, axis=1).max())
        # resolve the faster interior wavelength as well as the Nyquist-style rule
        n = max(8 * kmax * probe.diameter, 2 * (2.5 * kmax * max(self.Q, 1.0) * rmax + 20), 64)
        return build_surface(self.shape, 2 * int(np.ceil(n / 2)))

    def gamma(self):
        if self.bump is None:
            return BumpFunction()
        return BumpFunction(self.bump.get("center"), self.bump.get("width"))

    def checksum(self):
        """SHA-256 of the scientific content (output location and workers excluded)."""
        d = {k: v for k, v in asdict(self).items() if k not in ("out", "workers")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def load_config(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# output

@dataclass
class RunManifest:
    """Provenance record written next to every run's outputs."""

    command: str
    config: dict
    config_sha256: str
    version: str = __version__
    started: str = ""
    finished: str = ""
    status: int = EXIT_OK
    events: list = field(default_factory=list)
    calibration: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    error: str = None


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Writer:
    """Serialized, deterministic CSV/JSON writer that tracks checksums."""

    def __init__(self, out_dir, manifest):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest

    def _record(self, name, data):
        (self.out / name).write_bytes(data)
        self.manifest.files[name] = hashlib.sha256(data).hexdigest()

    def csv(self, name, columns, rows, units=""):
        buf = io.StringIO()
        buf.write(f"# tevp {self.manifest.command} config_sha256={self.manifest.config_sha256}"
                  f"{'; units: ' + units if units else ''}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self._record(name, buf.getvalue().encode("utf-8"))

    def json(self, name, obj):
        data = json.dumps(obj, sort_keys=True, indent=2, default=_json_default).encode("utf-8")
        self._record(name, data)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def _pmap(fn, items, workers):
    """Ordered parallel map (results merged in input order)."""
    items = list(items)
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# per-kappa tasks (module level so they can be pickled)

def _task_weyl(args):
    from .spectral import build_system_perturbed, eig_window
    cfg, k = args
    system = build_system_perturbed(cfg.surface(), k, cfg.Q)
    m = eig_window(system.A, cfg.epsilon, system).multiplicity
    return {"kappa": k, "m": m, "events": system.events,
            "calibration": {"kappa": k, "residual": system.calibration["residual"]}}


def _task_variance(args):
    from .diagnostics import quantum_variance
    from .spectral import build_system_perturbed, eig_window
    cfg, k = args
    system = build_system_perturbed(cfg.surface(), k, cfg.Q)
    pairs = eig_window(system.A, cfg.epsilon, system)
    var = quantum_variance(pairs, cfg.gamma()) if pairs.multiplicity else None
    return {"kappa": k, "m": pairs.multiplicity, "variance": var, "events": system.events,
            "calibration": {"kappa": k, "residual": system.calibration["residual"]}}


def _task_concentrate(args):
    from .diagnostics import concentration_sweep
    cfg, k = args
    return concentration_sweep(cfg.surface(), cfg.Q, cfg.epsilon, [k], cfg.gamma(), tuple(cfg.R), fit=False)


def _mode_grid(surface, n_radial, n_angular, smax=0.95):
    """Polar sampling grid ``s x(t)`` inside a star-shaped boundary (z = 0 slice in 3-D)."""
    s = np.linspace(smax / n_radial, smax, n_radial)
    t = 2 * np.pi * np.arange(n_angular) / n_angular
    if surface.dim == 2:
        base = surface.parametrize(t)[0]
        return (s[:, None, None] * base[None]).reshape(-1, 2)
    a = surface.radius
    ring = np.column_stack([np.cos(t), np.sin(t), np.zeros_like(t)]) * a
    return (s[:, None, None] * ring[None]).reshape(-1, 3)


def _task_modes(args):
    from .spectral import build_system_perturbed, eig_window
    cfg, k = args
    surface = cfg.surface()
    system = build_system_perturbed(surface, k, cfg.Q)
    pairs = eig_window(system.A, cfg.epsilon, system)
    nmax = int(cfg.options.get("max_modes", 4))
    idx = pairs.window[:nmax]
    modes = pairs.modes(idx)
    pts = _mode_grid(surface, int(cfg.options.get("n_radial", 40)), int(cfg.options.get("n_angular", 128)))
    out = []
    kwargs = {}
    if pairs.labels is None and len(idx):
        from .layerpot import upsampling_factor
        kwargs = {"upsample": upsampling_factor(surface, pts)}
    for j, m in zip(idx, modes):
        if pairs.labels is not None:
            u, v = m.field("u", pts), m.field("v", pts)
            gu, gv = m.field("u", pts, True), m.field("v", pts, True)
        else:
            u, v = m.u(pts, **kwargs), m.v(pts, **kwargs)
            gu, gv = m.grad_u(pts, **kwargs), m.grad_v(pts, **kwargs)
        out.append({"j": int(j), "lambda": float(pairs.eigenvalues[j]), "residual": float(m.residual),
                    "pts": pts, "u": u, "v": v,
                    "gu": np.sqrt((np.abs(gu) ** 2).sum(1)), "gv": np.sqrt((np.abs(gv) ** 2).sum(1))})
    return {"kappa": k, "m": pairs.multiplicity, "modes": out, "events": system.events,
            "calibration": {"kappa": k, "residual": system.calibration["residual"]}}


# ---------------------------------------------------------------------------
# commands

def cmd_eigs(cfg, writer):
    from .oracle import FIG1_KAPPA, radial_eigenvalues
    from .spectral import search_exact_eigenvalues
    lo, hi = cfg.kappa_range()
    surface = cfg.surface(kappa_max=hi)
    res = search_exact_eigenvalues(surface, cfg.Q, (lo, hi), cfg.options.get("scan_step"))
    writer.manifest.events.extend(res.events)
    oracle = []
    if surface.is_circle:
        oracle = radial_eigenvalues(2, surface.radius, cfg.Q, (lo, hi))
    ok = np.array([k for _, k in oracle])
    rows = []
    for k, n, r in zip(res.values, res.orders, res.residuals):
        if len(ok):
            i = int(np.argmin(np.abs(ok - k)))
            rows.append((k, n, r, ok[i], oracle[i][0], abs(ok[i] - k)))
        else:
            rows.append((k, n, r, None, None, None))
    writer.csv("eigenvalues.csv", ["kappa_star[1/length]", "order", "sigma_rel", "oracle_kappa[1/length]",
                                   "oracle_order", "abs_diff[1/length]"], rows, units="kappa in 1/length")
    summary = {"n_found": len(res.values), "n_oracle": len(oracle)}
    if len(ok):
        matched = [any(abs(k - o) <= 1e-6 for o in ok) for k in res.values]
        missed = [float(o) for o in ok if not any(abs(k - o) <= 1e-6 for k in res.values)]
        summary.update(all_matched=all(matched), missed_oracle_roots=missed)
    if res.values and lo <= FIG1_KAPPA <= hi:
        vals = np.array(res.values)
        i = int(np.argmin(np.abs(vals - FIG1_KAPPA)))
        dist = float(abs(vals[i] - FIG1_KAPPA))
        summary["anchor"] = {"target": FIG1_KAPPA, "nearest": float(vals[i]), "order": res.orders[i],
                             "distance": dist, "within_5e-3": dist <= 5e-3,
                             "note": None if dist <= 5e-3 else
                             "no root within 5e-3; the reference value may be rounded or use another normalization"}
    writer.json("eigs_summary.json", summary)


def cmd_oracle(cfg, writer):
    from .oracle import exact_operator_spectrum, radial_eigenvalues
    lo, hi = cfg.kappa_range()
    surface = build_surface(cfg.shape, 64 if cfg.d == 2 else 8)
    if not surface.rotation_invariant:
        raise ConfigError("shape: oracle tables need a circle or sphere")
    roots = radial_eigenvalues(cfg.d, surface.radius, cfg.Q, (lo, hi), cfg.options.get("order_range"))
    writer.csv("oracle_eigenvalues.csv", ["order", "kappa_star[1/length]"], roots, units="kappa in 1/length")
    k = cfg.kappas()[0]
    nmax = int(cfg.options.get("max_order", 20))
    spec = exact_operator_spectrum(surface, k, nmax)
    rows = [(n, spec["S"][n].real, spec["S"][n].imag, spec["Kstar"][n].real, spec["Kstar"][n].imag)
            for n in range(nmax + 1)]
    writer.csv("operator_spectrum.csv", ["order", "Re_S", "Im_S", "Re_Kstar", "Im_Kstar"], rows,
               units=f"S in length at kappa={k!r}; K* dimensionless")


def cmd_weyl(cfg, writer):
    from .diagnostics import scaling_fit
    from .exceptions import FitError
    res = _pmap(_task_weyl, [(cfg, k) for k in cfg.kappas()], cfg.workers)
    for r in res:
        writer.manifest.events.extend(r["events"])
        writer.manifest.calibration.append(r["calibration"])
    ks = np.array([r["kappa"] for r in res])
    ms = np.array([r["m"] for r in res])
    ok = ms > 0
    try:
        slope, _, se = scaling_fit(ks[ok], ms[ok])
    except FitError:
        slope = se = None
    scale = (2 * np.pi / ks) ** (cfg.d - 1)
    rows = [(k, m, s * m, slope, se) for k, m, s in zip(ks, ms, scale)]
    writer.csv("weyl.csv", ["kappa[1/length]", "m", "normalized_count", "slope", "slope_stderr"], rows,
               units="kappa in 1/length; normalized_count = (2 pi/kappa)^(d-1) m")


def cmd_variance(cfg, writer):
    res = _pmap(_task_variance, [(cfg, k) for k in cfg.kappas()], cfg.workers)
    for r in res:
        writer.manifest.events.extend(r["events"])
        writer.manifest.calibration.append(r["calibration"])
    writer.csv("variance.csv", ["kappa[1/length]", "m", "variance"],
               [(r["kappa"], r["m"], r["variance"]) for r in res], units="kappa in 1/length; variance dimensionless")


def cmd_concentrate(cfg, writer):
    from .diagnostics import ConcentrationReport
    parts = _pmap(_task_concentrate, [(cfg, k) for k in cfg.kappas()], cfg.workers)
    report = ConcentrationReport.merge(parts)
    writer.manifest.events.extend(report.events)
    writer.csv("concentration.csv", ["kappa[1/length]", "target", "zeta", "order", "value"], report.rows(),
               units="kappa in 1/length; order 0 values |zeta|^2 x area, order 1 |grad zeta|^2 x area")
    writer.csv("multiplicity.csv", ["kappa[1/length]", "m", "collar_fraction"],
               [(k, report.multiplicity[k], report.collar.get(k)) for k in sorted(report.multiplicity)],
               units="kappa in 1/length; collar width 3/kappa")
    writer.json("concentration.json", json.loads(report.to_json()))


def cmd_modes(cfg, writer):
    res = _pmap(_task_modes, [(cfg, k) for k in cfg.kappas()], cfg.workers)
    index = []
    for r in res:
        writer.manifest.events.extend(r["events"])
        writer.manifest.calibration.append(r["calibration"])
        for md in r["modes"]:
            name = f"mode_k{r['kappa']:.6g}_j{md['j']}.csv"
            coords = ["x", "y"] if md["pts"].shape[1] == 2 else ["x", "y", "z"]
            rows = [(*p, u.real, u.imag, v.real, v.imag, gu, gv)
                    for p, u, v, gu, gv in zip(md["pts"], md["u"], md["v"], md["gu"], md["gv"])]
            writer.csv(name, coords + ["Re_u", "Im_u", "Re_v", "Im_v", "abs_grad_u", "abs_grad_v"], rows,
                       units="coordinates in length; gradients in field/length")
            index.append((r["kappa"], md["j"], md["lambda"], md["residual"], name))
    writer.csv("modes_index.csv", ["kappa[1/length]", "j", "lambda", "residual", "file"], index,
               units="kappa in 1/length")


def cmd_symbols(cfg, writer):
    from .diagnostics import hamiltonian_check, symbol_check
    k = cfg.kappas()[0]
    surface = build_surface(cfg.shape, 64 if cfg.d == 2 else 16)
    qs = tuple(cfg.options.get("Qs", (2.0, 3.0)))
    sc = symbol_check(surface, k, qs)
    hc = hamiltonian_check(surface, k, cfg.Q)
    rows = [("S_exponent", sc["S_exponent"]), ("subleading_ratio", sc["subleading_ratio"]),
            ("subleading_expected", sc["subleading_expected"]), ("K_ratio", sc["K_ratio"]),
            ("K_expected", sc["K_expected"])]
    rows += [(f"S_leading_Q{q:g}", v) for q, v in sc["S_leading"].items()]
    rows += [(f"S_subleading_Q{q:g}", v) for q, v in sc["S_subleading"].items()]
    for name, r in hc["readings"].items():
        rows += [(f"hamiltonian_{name}_p", r["p"]), (f"hamiltonian_{name}_c", r["c"])]
    rows.append(("hamiltonian_matching_reading", hc["matching"]))
    writer.csv("symbols.csv", ["quantity", "value"], rows, units=f"dimensionless; kappa={k!r}")
    disp = list(zip(hc["xi"], hc["lambda"]))
    writer.csv("dispersion.csv", ["xi", "lambda"], disp, units="xi = scaled frequency (dimensionless)")


def cmd_scatter(cfg, writer):
    from .oracle import RadialMode, radial_eigenvalues
    from .scatter import invisibility_report
    from .spectral import exact_mode
    opts = cfg.options
    k = opts.get("kappa_star")
    surface = cfg.surface(kappa_max=max(cfg.kappas()))
    if surface.is_circle:
        if k is None:
            lo, hi = cfg.kappa_range()
            order = opts.get("order")
            roots = radial_eigenvalues(2, surface.radius, cfg.Q, (lo, hi),
                                       None if order is None else (int(order), int(order)))
            if not roots:
                raise ConfigError("kappa: no transmission eigenvalue in range for the scatter run")
            order, k = roots[0]
        else:
            order = int(opts.get("order", 0))
        mode = RadialMode(2, surface.radius, int(order), float(k), cfg.Q)
    else:
        if k is None:
            raise ConfigError("options.kappa_star: required for non-circular shapes")
        mode = exact_mode(surface, cfg.Q, float(k))
    ladder = opts.get("ladder")
    rep = invisibility_report(surface, cfg.Q, float(k), mode, ladder=ladder)
    cols = ["regularization", "eps_fit", "g_norm", "far_field_norm", "interior_deviation", "ratio_far",
            "ratio_interior"]
    writer.csv("invisibility.csv", cols, [[r[c] for c in cols] for r in rep["ladder"]],
               units=f"kappa_star={float(k)!r}; norms in discrete L2")
    writer.json("invisibility.json", rep)


DISPATCH = {"eigs": cmd_eigs, "modes": cmd_modes, "concentrate": cmd_concentrate, "weyl": cmd_weyl,
            "variance": cmd_variance, "symbols": cmd_symbols, "scatter": cmd_scatter, "oracle": cmd_oracle}


def build_parser():
    p = argparse.ArgumentParser(prog="tevp", description="Transmission eigenvalue laboratory")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--workers", type=int, help="parallel workers over kappa (default: all cores)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(command, cfg, out_dir=None):
    """Execute one command; returns the exit status."""
    out = out_dir or cfg.out
    manifest = RunManifest(command, asdict(cfg), cfg.checksum(), started=_now())
    writer = Writer(out, manifest)
    status = EXIT_OK
    try:
        DISPATCH[command](cfg, writer)
    except ConfigError as err:
        status, manifest.error = EXIT_CONFIG, f"config error: {err}"
    except (TevpError, np.linalg.LinAlgError, FloatingPointError) as err:
        status, manifest.error = EXIT_NUMERIC, f"{type(err).__name__}: {err}"
    except Exception as err:  # keep the event log even for unexpected failures
        logger.exception("unexpected failure")
        status, manifest.error = EXIT_NUMERIC, f"{type(err).__name__}: {err}"
    manifest.status = status
    manifest.finished = _now()
    Path(out).mkdir(parents=True, exist_ok=True)
    (Path(out) / "manifest.json").write_text(
        json.dumps(asdict(manifest), sort_keys=True, indent=2, default=_json_default), encoding="utf-8")
    if manifest.error:
        print(manifest.error, file=sys.stderr)
    return status


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"workers": args.workers})
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
