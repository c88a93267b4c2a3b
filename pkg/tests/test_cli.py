import csv
import json

import pytest

from fdtd_dispersion.cli import build_parser, main, parse_angle_grid, parse_s_list

SUBCOMMANDS = ["dispersion-map", "optimal-dt", "run-1d", "run-cavity2d", "run-cavity3d"]


@pytest.mark.parametrize("text, expected", [
    ("0.5,0.7,1.0", [0.5, 0.7, 1.0]),
    ("0.1:0.5:0.1", [0.1, 0.2, 0.3, 0.4, 0.5]),
    ("0.2:1.0:0.1", [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
])
def test_parse_s_list(text, expected):
    assert parse_s_list(text) == pytest.approx(expected)


@pytest.mark.parametrize("bad", ["", "a,b", "0.5:0.1:0.1", "-1", "0.1:1:0"])
def test_parse_s_list_rejects(bad):
    import argparse

    with pytest.raises(argparse.ArgumentTypeError):
        parse_s_list(bad)


def test_parse_angle_grid():
    assert parse_angle_grid("31x61") == (31, 61)


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_exits_zero_and_documents_units(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "[m]" in out or "[Hz]" in out or "dimensionless" in out
    # every flag carries a help string
    for action in build_parser()._subparsers._group_actions[0].choices[cmd]._actions:
        assert action.help


def test_missing_frequency_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["dispersion-map", "--scheme", "fdtd22", "--dx", "6e-3", "--out", str(tmp_path / "m.csv")])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_magic_step_map(tmp_path):
    out = tmp_path / "m.csv"
    code = main(["dispersion-map", "--scheme", "fdtd22", "--freq-hz", "5e9", "--dx", "6e-3",
                 "--dim", "1", "--s-list", "1.0", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["s", "theta_rad", "phi_rad", "k_exact", "k_num", "vp_ratio", "nde"]
    assert all(float(r["nde"]) < 1e-12 for r in rows)
    manifest = json.loads((tmp_path / "m.csv.manifest.json").read_text())
    assert manifest["subcommand"] == "dispersion-map"


def test_map_output_is_byte_identical(tmp_path):
    args = ["dispersion-map", "--scheme", "fdtd24", "--freq-hz", "5e9", "--dx", "6e-3",
            "--grid", "5x9", "--s-list", "0.5,1.0", "--theta-deg", "90"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len((tmp_path / "a.csv").read_text().splitlines()) == 1 + 2 * 9


def test_solver_failure_exit_code(tmp_path):
    # 2 cells per wavelength at S = 0.5 has no propagating solution
    code = main(["dispersion-map", "--scheme", "fdtd22", "--freq-hz", "2.9e9", "--dx", "0.05",
                 "--dim", "1", "--s-list", "0.5", "--out", str(tmp_path / "f.csv")])
    assert code == 3


def test_optimal_dt_rejects_fdtd22(tmp_path, capsys):
    code = main(["optimal-dt", "--scheme", "fdtd22", "--freq-hz", "5e9", "--dx", "6e-3",
                 "--out", str(tmp_path / "o.csv")])
    assert code == 2
    assert "S = 1" in capsys.readouterr().err


def test_optimal_dt_interior(tmp_path, capsys):
    out = tmp_path / "o.csv"
    code = main(["optimal-dt", "--freq-hz", "5e9", "--dx", "6e-3", "--grid", "7x13",
                 "--search-tol", "1e-3", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    s_opt = float(text.split("s_opt = ")[1].split()[0])
    assert 0.0 < s_opt < 1.0
    assert out.read_text().startswith("s,objective")


def test_run_1d_writes_waveforms(tmp_path):
    prefix = tmp_path / "w"
    assert main(["run-1d", "--scheme", "fdtd22", "--s-list", "0.5,0.7,1.0", "--out", str(prefix)]) == 0
    for s in ("0.5", "0.7", "1"):
        lines = (tmp_path / f"w_s{s}.csv").read_text().splitlines()
        assert lines[0] == "t_seconds,value"
    assert (tmp_path / "w.manifest.json").exists()


def test_cavity3d_instability_exit_code(tmp_path, capsys):
    code = main(["run-cavity3d", "--scheme", "fdtd22", "--s-list", "1.1", "--out", str(tmp_path / "c.csv")])
    assert code == 4
    assert "s = 1.1" in capsys.readouterr().err


def test_cavity2d_small_run(tmp_path):
    out = tmp_path / "c.csv"
    code = main(["run-cavity2d", "--scheme", "fdtd24", "--pol", "tm", "--s-list", "0.9",
                 "--resolution", "0.05", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["s", "m", "n", "p", "f_ref_hz", "f_meas_hz", "rel_error"]
    assert len(rows) == 4
    assert json.loads((tmp_path / "c.csv.manifest.json").read_text())["seed"] is not None
