"""Command-line interface: config layering, CSV format, exit codes."""
import csv
import io
import math
from pathlib import Path

import pytest

from ceramsim import cli
from ceramsim.config import ConfigError, RunConfig, load_program

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_format_value():
    assert cli.format_value(0.0) == "0"
    assert cli.format_value(1 / 3) == "0.333333333333"
    assert cli.format_value(True) == "1"
    assert cli.format_value(7) == "7"
    assert cli.format_value(1.5e-300) == "1.5e-300"


def test_compaction_curve_csv(capsys):
    code, out, _ = run(capsys, "compaction-curve", "--set", "n_points=5")
    assert code == 0
    assert "\r" not in out and out.endswith("\n")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["rho_hat", "pc_plane_MPa", "pc_mla_MPa", "pc_geometric_MPa",
                       "geometry_valid"]
    assert len(rows) == 6
    assert float(rows[1][0]) == pytest.approx(0.40)
    assert rows[1][3] == "nan" and rows[1][4] == "0"
    assert all(len(v.split("e")[0].replace("-", "").replace(".", "")) <= 12 for v in rows[3][:3])


def test_yield_surface_endpoints(capsys):
    code, out, _ = run(capsys, "yield-surface", "--set", "n_samples=11")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 33
    for rho in ("0.5", "0.7", "0.9"):
        q = [float(r["q_MPa"]) for r in rows if r["rho_hat"] == rho]
        assert q[0] == 0.0 and q[-1] == 0.0 and max(q) > 0.0


def test_set_overrides_config_file(tmp_path, capsys):
    cfg = tmp_path / "a.cfg"
    cfg.write_text("# comment line\nn_points = 4   # trailing comment\nrho_min = 0.5\n")
    code, out, _ = run(capsys, "compaction-curve", "--config", str(cfg), "--set", "n_points=3")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 4 and float(rows[1][0]) == 0.5


def test_unknown_key_exits_2(capsys):
    code, out, err = run(capsys, "compaction-curve", "--set", "bogus=1")
    assert code == 2 and out == ""
    assert "bogus" in err and err.count("\n") == 1


def test_invalid_physics_exits_2(capsys, tmp_path):
    assert run(capsys, "press", "--set", "E=-1")[0] == 2
    assert run(capsys, "press", "--set", "stroke_ratio=abc")[0] == 2
    assert run(capsys, "compaction-curve", "--config", str(tmp_path / "missing.cfg"))[0] == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign here\n")
    assert run(capsys, "compaction-curve", "--config", str(bad))[0] == 2
    assert run(capsys, "point-run")[0] == 2


def test_numerical_failure_exits_3(capsys):
    code, _, err = run(capsys, "press", "--set", "newton_max_iter=1", "--set",
                       "substep_max_levels=0", "--set", "press_steps=2")
    assert code == 3
    assert err.startswith("ceramsim: error: numerical:")


def test_out_file_and_dump_roundtrip(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    dump = tmp_path / "eff.cfg"
    code, stdout, _ = run(capsys, "compaction-curve", "--set", "n_points=3", "--out", str(out),
                          "--dump-config", str(dump))
    assert code == 0 and stdout == ""
    assert out.read_bytes().count(b"\n") == 4
    a = RunConfig.load(dump)
    b = RunConfig.load(None, ["n_points=3"])
    assert a.values == b.values


def test_press_and_dilatometer_commands(capsys):
    code, out, _ = run(capsys, "press", "--set", "press_steps=20", "--set", "press_duration=1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert "sigma_axial_MPa" in rows[0]
    assert float(rows[-1]["rho_hat"]) > 0.38
    code, out, _ = run(capsys, "dilatometer", "--set", "T_max=900", "--set", "max_dt=10")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[-1]["T_C"]) == pytest.approx(900.0)
    assert {"eps_raw", "eps_corrected", "R2_growth_m2"} <= set(rows[0])


def test_heat1d_wide_layout(capsys):
    code, out, _ = run(capsys, "heat1d", "--set", "n_nodes=3", "--set", "T_max=300",
                       "--set", "heat_dt=60")
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert header[:4] == ["time_s", "T_C_n0", "rho_hat_n0", "R_grain_m_n0"]
    assert len(header) == 10


def test_bundled_scenarios_run(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(ROOT)
    for cmd, cfg in [("press", "press.cfg"), ("point-run", "point_run.cfg")]:
        code, out, err = run(capsys, cmd, "--config", str(SCENARIOS / cfg))
        assert code == 0, err
        assert len(out.splitlines()) > 10


def test_program_parsing(tmp_path):
    segs, initial = load_program(SCENARIOS / "hot_press.ini")
    assert initial == {"T": 20.0, "rho_hat": 0.5}
    assert len(segs) == 3 and segs[1].stress_mask[:3] == (True, True, True)
    bad = tmp_path / "p.ini"
    bad.write_text("[segment a]\nduration = 1\nrate_11 = 1\nstress_11 = 0\n")
    with pytest.raises(ConfigError, match="both"):
        load_program(bad)
    bad.write_text("[segment a]\nduration = 1\nspeed = 2\n")
    with pytest.raises(ConfigError, match="speed"):
        load_program(bad)
    bad.write_text("[segment a]\nduration = 1\ntemperature = warm 3\n")
    with pytest.raises(ConfigError):
        load_program(bad)
