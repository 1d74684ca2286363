import csv
import hashlib
import json
import subprocess

import numpy as np
import pytest

from tevp.cli import RunConfig, main
from tevp.exceptions import ConfigError


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# tevp ") and "config_sha256=" in lines[0]
    return list(csv.DictReader(lines[1:]))


def _check_manifest(out):
    man = json.loads((out / "manifest.json").read_text())
    for name, digest in man["files"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    return man


def test_eigs_anchor(tmp_path):
    cfg = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 8, "kappa": {"min": 3, "max": 6}}
    out = tmp_path / "eigs"
    assert main(["eigs", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    rows = _read_csv(out / "eigenvalues.csv")
    ks = np.array([float(r["kappa_star[1/length]"]) for r in rows])
    assert np.abs(ks - 5.5496).min() <= 5e-3
    summary = json.loads((out / "eigs_summary.json").read_text())
    assert summary["all_matched"] and not summary["missed_oracle_roots"]
    man = _check_manifest(out)
    assert man["status"] == 0 and set(man["files"]) == {"eigenvalues.csv", "eigs_summary.json"}


def test_weyl_single_point(tmp_path):
    cfg = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 2, "kappa": {"list": [10.0]}, "workers": 1}
    out = tmp_path / "weyl"
    assert main(["weyl", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    (row,) = _read_csv(out / "weyl.csv")
    assert row["slope"] == "" and int(row["m"]) > 0


def test_concentrate_deterministic(tmp_path):
    cfg = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 2, "kappa": {"list": [8.0, 10.0, 12.0, 14.0]},
           "seed": 3}
    path = _write(tmp_path, cfg)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["concentrate", "--config", path, "--out", str(a), "--workers", "1"]) == 0
    assert main(["concentrate", "--config", path, "--out", str(b), "--workers", "2"]) == 0
    for name in ("concentration.csv", "multiplicity.csv", "concentration.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    _check_manifest(a)


@pytest.mark.parametrize("command", ["variance", "symbols", "oracle", "modes"])
def test_other_commands_write_outputs(tmp_path, command):
    cfg = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 2, "kappa": {"list": [20.0]},
           "bump": {"center": [1, 0], "width": 1.5}, "options": {"max_modes": 2}, "workers": 1}
    if command == "oracle":
        cfg["kappa"] = {"min": 2.0, "max": 6.0}
    out = tmp_path / command
    assert main([command, "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    man = _check_manifest(out)
    assert man["files"]
    for name in man["files"]:
        if name.endswith(".csv"):
            assert _read_csv(out / name)


def test_modes_on_kite(tmp_path):
    cfg = {"shape": {"kind": "kite"}, "Q": 2, "kappa": {"list": [4.0]}, "resolution": 128,
           "options": {"max_modes": 1, "n_radial": 6, "n_angular": 32}, "workers": 1}
    out = tmp_path / "km"
    assert main(["modes", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    (row,) = _read_csv(out / "modes_index.csv")
    data = _read_csv(out / row["file"])
    assert len(data) == 6 * 32
    assert all(np.isfinite(float(r["Re_u"])) for r in data)


def test_scatter_command(tmp_path):
    cfg = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 2, "kappa": {"min": 3.0, "max": 5.0},
           "options": {"order": 3, "ladder": [1e-2, 1e-4]}, "workers": 1}
    out = tmp_path / "sc"
    assert main(["scatter", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    rows = _read_csv(out / "invisibility.csv")
    assert len(rows) == 2


@pytest.mark.parametrize("bad,field", [
    ({"Q": 1.0}, "Q"), ({"epsilon": 0.7}, "epsilon"), ({"kappa": {"list": [-1]}}, "kappa"),
    ({"resolution": 16}, "resolution"), ({"colour": "red"}, "unknown"), ({"shape": {"kind": "blob"}}, "shape"),
    ({"R": [1.5]}, "R"),
])
def test_config_errors(tmp_path, capsys, bad, field):
    cfg = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 2, "kappa": {"list": [10.0]}}
    cfg.update(bad)
    assert main(["weyl", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "x")]) == 2
    assert field in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["weyl", "--config", str(tmp_path / "nope.json")]) == 2


def test_numerical_failure_exit_code(tmp_path):
    cfg = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 2, "kappa": {"min": 5.0, "max": 6.0},
           "options": {"max_order": 400}}
    out = tmp_path / "bad"
    assert main(["oracle", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 3
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == 3 and "NumericalRangeError" in man["error"]


def test_checksum_ignores_output_location():
    base = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 2, "kappa": {"list": [10.0]}}
    a = RunConfig.from_dict({**base, "out": "x", "workers": 1})
    b = RunConfig.from_dict({**base, "out": "y", "workers": 4})
    c = RunConfig.from_dict({**base, "Q": 3})
    assert a.checksum() == b.checksum() != c.checksum()
    with pytest.raises(ConfigError):
        RunConfig.from_dict([1, 2])


def test_default_resolution_rule():
    cfg = RunConfig.from_dict({"shape": {"kind": "circle", "radius": 1.0}, "Q": 8, "kappa": {"min": 3, "max": 6}})
    s = cfg.surface()
    assert s.n_nodes % 2 == 0
    assert s.n_nodes >= 8 * 6 * 2 and s.n_nodes >= 2 * (2.5 * 6 * 8 + 20)


def test_console_script(tmp_path):
    cfg = {"shape": {"kind": "circle", "radius": 1.0}, "Q": 2, "kappa": {"list": [10.0]}, "workers": 1}
    out = tmp_path / "cs"
    proc = subprocess.run(["tevp", "weyl", "--config", _write(tmp_path, cfg), "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "weyl.csv").exists()
