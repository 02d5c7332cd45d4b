import json
import subprocess
import sys

import pytest

from slgeo import cones
from slgeo.cli import main


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_ok_and_deterministic(capsys):
    argv = ["verify", "--family", "hl", "--t", "0.5", "--samples", "200", "--seed", "3"]
    code, out1, _ = _run(argv, capsys)
    assert code == 0
    rep = json.loads(out1)
    assert rep["max_sl_residual"] < 1e-8
    assert rep["violations"] == []
    _, out2, _ = _run(argv, capsys)
    assert out1 == out2


def test_verify_violation_exit_code(capsys):
    code, out, _ = _run(["verify", "--family", "so3", "--samples", "50", "--tol", "1e-20"], capsys)
    assert code == 2
    assert json.loads(out)["violations"][0]["field"] == "max_sl_residual"


def test_verify_writes_files(tmp_path, capsys):
    out, csv = tmp_path / "r.json", tmp_path / "c.csv"
    code = main(["verify", "--family", "quadric", "--a1", "1", "--a2", "2", "--c", "-1", "--samples", "40",
                 "--out", str(out), "--csv", str(csv)])
    assert code == 0
    assert json.loads(out.read_text())["params"] == [1, 2, -1.0]
    assert len(csv.read_text().splitlines()) == 41


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--family", "nope"])
    assert exc.value.code == 1


def test_solve_from_flags_and_file(tmp_path, capsys):
    code, out, _ = _run(["solve", "--h", "0.125", "--a", "0.5", "--phi", "x^2 - y"], capsys)
    assert code == 0
    assert json.loads(out)["residual"] <= 1e-8
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"domain": {"type": "ellipse", "ax": 1.0, "ay": 0.7}, "h": 0.125, "a": 0.0,
                                "phi": {"theta": [0, 2.0, 4.0], "value": [0.0, 1.0, -1.0]}}))
    grid = tmp_path / "g.csv"
    code, out, _ = _run(["solve", "--input", str(prob), "--grid", str(grid)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["cauchy_converged"] and rep["phi"] == "table"
    assert grid.read_text().startswith("x,y,f")


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"h": 0.1,\n "a": 0.5,\n "phi": "x"\n')
    code, _, err = _run(["solve", "--input", str(bad)], capsys)
    assert code == 1
    assert "line 4" in err and "column" in err


def test_missing_field_is_named(tmp_path, capsys):
    prob = tmp_path / "p.json"
    prob.write_text(json.dumps({"h": 0.1, "phi": "x"}))
    code, _, err = _run(["solve", "--input", str(prob)], capsys)
    assert code == 1
    assert "'a'" in err
    code, _, err = _run(["solve", "--h", "0.1", "--a", "0.5", "--phi", "import os"], capsys)
    assert code == 1 and "phi" in err


def test_fiber_command(tmp_path, capsys):
    cfg = tmp_path / "f.json"
    cfg.write_text(json.dumps({"family": {"phi": "0"}, "keys": [[0.3, 0.1, 0.0], [0.3, -0.2, 0.1], [0.5, 0.0, 0.0]],
                               "h": 0.125}))
    code, out, _ = _run(["fiber", "--input", str(cfg), "--outdir", str(tmp_path / "fib"), "--n-theta", "4"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["disjointness_min_distance"] > 0
    assert rep["zero_counts"] == [{"pair": [0, 1], "interior_zeros": 0}]
    assert rep["flux"] is not None
    assert len(list((tmp_path / "fib").iterdir())) == 3
    cfg.write_text(json.dumps({"family": {}, "keys": [[0.3, 0.1]]}))
    code, _, err = _run(["fiber", "--input", str(cfg)], capsys)
    assert code == 1 and "keys" in err


def test_evolve_command(capsys):
    code, out, _ = _run(["evolve", "--steps", "50", "--samples", "30"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["max_drift"] < 1e-12
    assert rep["final_time"] == pytest.approx(0.05)
    code, out, _ = _run(["evolve", "--seed-kind", "plane", "--steps", "5", "--dt", "0.01", "--n", "5"], capsys)
    assert code == 0


def test_spectrum_preset_and_custom(tmp_path, capsys):
    code, out, _ = _run(["spectrum", "--preset", "clifford-t2", "--count", "40"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["s_ind"] == 0 and rep["stable"] is True and rep["N_of_2"] == 13
    code, out, _ = _run(["spectrum", "--sphere", "2", "1", "1", "--b0", "1", "--dim-g", "0"], capsys)
    # a single SL plane: N(2) = 1 + 3 + 5 = 9 but dim G = 0 understates its symmetry, so the index is negative
    assert code == 2
    assert json.loads(out)["s_ind"] is None
    code, _, err = _run(["spectrum", "--sphere", "2", "1", "1"], capsys)
    assert code == 1 and "--b0" in err
    off = tmp_path / "t.off"
    cones.write_off(off, cones.square_torus_mesh(24))
    code, out, _ = _run(["spectrum", "--mesh", str(off), "--count", "10", "--b0", "1", "--dim-g", "2"], capsys)
    assert json.loads(out)["link"]["vertices"] == 24 * 24


def test_index_command(tmp_path, capsys):
    cfg = tmp_path / "i.json"
    cfg.write_text(json.dumps({"b0_Xprime": 1, "cones": [{"b1cs": 1, "sind": 0}]}))
    code, out, _ = _run(["index", "--input", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["index"] == 1
    outfile = tmp_path / "o.json"
    code, out, _ = _run(["index", "--input", str(cfg), "--out", str(outfile)], capsys)
    assert out.strip() == "1"
    cfg.write_text(json.dumps({"b0_Xprime": 1, "cones": [{"b1cs": 1, "sind": -1}]}))
    code, _, err = _run(["index", "--input", str(cfg)], capsys)
    assert code == 1
    cfg.write_text(json.dumps({"b0_Xprime": 1, "cones": [{"b1cs": 1}]}))
    code, _, err = _run(["index", "--input", str(cfg)], capsys)
    assert code == 1 and "'sind'" in err


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "slgeo.cli", "spectrum", "--preset", "so3-pair"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["s_ind"] == 5
