import json

import pytest

from radarint import cli
from radarint.errors import NumericalError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if code == 0 else None), out.err


def test_analytic_threshold(capsys):
    code, out, _ = run(capsys, "analytic", "threshold")
    assert code == 0
    assert out["dbm"] == pytest.approx(-71.67, abs=0.01)


def test_analytic_units(capsys):
    _, out, _ = run(capsys, "analytic", "noise-only-dm", "--pt-dbm", "20")
    assert out["meters"] == pytest.approx(52.70, abs=0.01)
    _, out, _ = run(capsys, "analytic", "pd", "--distance", "20", "--alpha", "3", "--fading", "rayleigh",
                    "--freq-ghz", "2.4")
    assert out["pd"] == pytest.approx(0.5284, abs=1e-4)


def test_config_layering(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lam": 1.6e-3}))
    _, base, _ = run(capsys, "analytic", "dm")
    _, from_file, _ = run(capsys, "analytic", "dm", "--config", str(cfg))
    _, flag_wins, _ = run(capsys, "analytic", "dm", "--config", str(cfg), "--lam", "1e-4")
    assert from_file["meters"] == pytest.approx(base["meters"] / 2)
    assert flag_wins["meters"] == base["meters"]


def test_validation_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "analytic", "dm", "--alpha", "1.5")
    assert code == cli.EXIT_INVALID and "alpha" in err
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"lamda": 1}))
    code, _, err = run(capsys, "analytic", "dm", "--config", str(cfg))
    assert code == cli.EXIT_INVALID and "lamda" in err
    code, _, _ = run(capsys, "analytic", "pd")
    assert code == cli.EXIT_INVALID


def test_numerical_exit_code(capsys, monkeypatch):
    def fail(*a, **k):
        raise NumericalError("no convergence")

    monkeypatch.setattr(cli.an, "max_range_nofading", fail)
    code, _, err = run(capsys, "analytic", "dm")
    assert code == cli.EXIT_NUMERICAL and "no convergence" in err


def test_figure_to_env_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("RADARINT_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "figure", "5")
    assert code == 0
    assert (tmp_path / "fig5.csv").exists() and out["rows"] == 15


def test_sweep(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"axis": "lambda", "start": 1e-6, "stop": 1e-3, "num": 4, "scale": "log",
                                "quantity": "dm", "methods": ["analytic"], "out": str(tmp_path / "o.csv")}))
    code, out, _ = run(capsys, "sweep", "--spec", str(spec))
    assert code == 0 and out["rows"] == 4
    assert (tmp_path / "o.csv").read_text().splitlines()[1] == "lambda,analytic"


def test_sweep_invalid(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"axis": "lambda", "values": [], "methods": ["analytic"]}))
    code, _, err = run(capsys, "sweep", "--spec", str(spec))
    assert code == cli.EXIT_INVALID and "values" in err


def test_dumps(capsys, tmp_path):
    code, out, _ = run(capsys, "scene-dump", "--radius", "500", "--seed", "2", "--out", str(tmp_path / "s.csv"))
    assert code == 0 and out["radars"] > 0
    code, out, _ = run(capsys, "pattern-dump", "--pattern", "array", "--out", str(tmp_path / "a.csv"))
    assert code == 0 and 24 <= out["pattern"]["half_power_beamwidth"] * 180 / 3.141592653589793 <= 27
