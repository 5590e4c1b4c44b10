import csv
import json
import re
from pathlib import Path

import pytest

from rydion import cli, config
from rydion.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
SHIPPED = ROOT / "configs" / "fig1_default.conf"

TOY = """\
species = Na
omega_ghz = 3000
t_periods = 327
n0 = 12
n0_range = 11:13
t_list = 30, 100, 300, 1000

[basis]
margin_below = 4
margin_above = 8
absorber_width = 3
"""


@pytest.fixture
def toy(tmp_path):
    p = tmp_path / "toy.conf"
    p.write_text(TOY)
    return p


def run(*argv, out):
    return cli.main([*argv, "--out", str(out), "--workers", "1"])


def test_parse_sections_and_comments():
    raw = config.parse_text("a = 1  # note\n[grid]\nmin = 0.1\n\n# only a comment\n")
    assert raw == {"a": "1", "grid.min": "0.1"}
    with pytest.raises(ConfigError):
        config.parse_text("a = 1\na = 2\n")
    with pytest.raises(ConfigError):
        config.parse_text("just words\n")


def test_shipped_config_defaults():
    cfg = config.load(SHIPPED, environ={})
    assert cfg["species"] == "H" and cfg["omega_ghz"] == 36.0 and cfg["t_periods"] == 327
    assert cfg["n0_range"] == tuple(range(28, 81, 4))
    assert cfg["seed"] == config.DEFAULT_SEED


def test_precedence(toy):
    env = {"RYDION_OMEGA_GHZ": "1000", "RYDION_GRID__POINTS": "30"}
    cfg = config.load(toy, ["omega_ghz=2000"], environ=env)
    assert cfg["omega_ghz"] == 2000 and cfg.sources["omega_ghz"] == "flag"
    assert cfg["grid.points"] == 30 and cfg.sources["grid.points"] == "env"
    assert cfg["species"] == "Na" and cfg.sources["species"] == "file"
    assert cfg["regime.eta"] == 0.5 and cfg.sources["regime.eta"] == "default"


@pytest.mark.parametrize("env", [{"RYDION_SPEICES": "H"}, {"RYDION_GRID__POINTS": "many"}])
def test_bad_environment(toy, env):
    with pytest.raises(ConfigError):
        config.load(toy, environ=env)


@pytest.mark.parametrize("override", ["grid.min=0.9", "omega_ghz=-1", "n0_range=5:1:0", "grid.spacing=cubic"])
def test_bad_values(toy, override):
    with pytest.raises(ConfigError):
        config.load(toy, [override], environ={})


def test_unknown_key_exit_2(toy, tmp_path, capsys):
    toy.write_text(TOY + "speices = H\n")
    assert run("curve", "--config", str(toy), out=tmp_path / "o") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and "speices" in err["message"]
    assert json.loads((tmp_path / "o" / "error.json").read_text())["error"] == "ConfigError"


def test_missing_config_exit_2(tmp_path):
    assert run("curve", "--config", str(tmp_path / "nope.conf"), out=tmp_path) == 2
    assert cli.main(["curve"]) == 2


def test_curve_csv_contract(toy, tmp_path):
    out = tmp_path / "a"
    assert run("curve", "--config", str(toy), out=out) == 0
    raw = (out / "curve.csv").read_bytes()
    assert raw.count(b"\r\n") == 4
    rows = list(csv.reader(raw.decode().splitlines()))
    assert tuple(rows[0]) == cli.CURVE_COLUMNS
    # every column name other than n0, regime and error carries a unit tag
    assert all(re.search(r"_(au|GHz|scaled|periods)$", c) for c in rows[0] if c not in ("n0", "regime", "error"))
    sci = re.compile(r"^-?\d\.\d{12}e[+-]\d{2,3}$")
    for row in rows[1:]:
        assert [sci.match(x) is not None for x in row[1:6]] == [True] * 5
        assert row[6] in ("I", "II", "III") and row[9] == ""
        lo, f, hi = float(row[7]), float(row[4]), float(row[8])
        assert lo <= f <= hi
    rec = json.loads((out / "curve.json").read_text())
    assert list(rec)[:6] == ["tool", "version", "command", "config", "results", "diagnostics"]
    assert rec["config"]["species"] == "Na" and len(rec["results"]["points"]) == 3


def test_curve_deterministic(toy, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("curve", "--config", str(toy), out=a) == 0
    assert cli.main(["curve", "--config", str(toy), "--out", str(b), "--workers", "2"]) == 0
    assert (a / "curve.csv").read_bytes() == (b / "curve.csv").read_bytes()
    ra, rb = (json.loads((d / "curve.json").read_text()) for d in (a, b))
    ra.pop("wall_clock"), rb.pop("wall_clock")
    assert ra == rb


def test_threshold_domain_error_exit_3(toy, tmp_path):
    code = run("threshold", "--config", str(toy), "--override", "grid.min=1e-4", "--override", "grid.max=2e-4",
               out=tmp_path)
    assert code == 3
    err = json.loads((tmp_path / "error.json").read_text())
    assert "above scan range" in err["message"] and err["diagnostics"]["max_yield"] < 0.1


def test_cutoff_convergence_error_exit_4(toy, tmp_path):
    assert run("threshold", "--config", str(toy), "--override", "floquet.K=3", out=tmp_path) == 4


def test_threshold_record(toy, tmp_path):
    assert run("threshold", "--config", str(toy), out=tmp_path) == 0
    rec = json.loads((tmp_path / "threshold.json").read_text())
    p = rec["results"]["threshold"]
    assert p["bracket_au"][0] <= p["F_au"] <= p["bracket_au"][1]
    assert rec["diagnostics"]["convergence_delta_P"] >= 0


def test_regimes(toy, tmp_path):
    assert run("regimes", "--config", str(toy), "--override", "species=H", "--override", "omega_ghz=36",
               "--override", "n0_range=40, 52, 60", out=tmp_path) == 0
    rows = list(csv.reader((tmp_path / "regimes.csv").read_text().splitlines()))
    assert [r[3] for r in rows[1:]] == ["III", "II", "I"]


def test_time_scan(toy, tmp_path):
    assert run("time-scan", "--config", str(toy), out=tmp_path) == 0
    res = json.loads((tmp_path / "time-scan.json").read_text())["results"]
    assert res["t_range_periods"] == [30, 1000] and res["r_squared"] <= 1


def test_validate(tmp_path):
    p = tmp_path / "v.conf"
    p.write_text("species = H\nn0 = 30\nomega_ghz = 36\nvalidate.fields_f0 = 0.02, 0.05\n"
                 "basis.margin_below = 10\nbasis.margin_above = 14\nbasis.absorber_width = 6\n")
    assert run("validate", "--config", str(p), out=tmp_path) == 0
    res = json.loads((tmp_path / "validate.json").read_text())["results"]
    assert (res["n_min"], res["n_max"]) == (20, 44)
    assert res["max_abs_dP"] <= 2e-3


def test_anderson(tmp_path):
    p = tmp_path / "a.conf"
    p.write_text("species = H\nn0 = 70\nomega_ghz = 36\n")
    assert run("anderson", "--config", str(p), out=tmp_path) == 0
    res = json.loads((tmp_path / "anderson.json").read_text())["results"]
    assert res["n_sites"] == len(res["sites"]) >= 8
    assert res["F0_loc_scaled"] > 0
    assert run("anderson", "--config", str(p), "--override", "n0=40", out=tmp_path / "x") == 3
