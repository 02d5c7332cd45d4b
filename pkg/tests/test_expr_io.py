import json

import numpy as np
import pytest

from slgeo import io
from slgeo.expr import ExpressionError, parse_expression
from slgeo.u1pde import DomainMesh, disk


def test_expression_values():
    f = parse_expression("x^2 - 0.5*sin(pi*y) + exp(-x) / 2")
    x, y = np.array([0.3, -1.0]), np.array([0.25, 1.0])
    assert np.allclose(f(x, y), x ** 2 - 0.5 * np.sin(np.pi * y) + np.exp(-x) / 2)
    assert f.source.startswith("x^2")
    assert parse_expression("2")(np.zeros(3), np.zeros(3)).shape == (3,)
    assert parse_expression("-x + +y")(1.0, 2.0) == 1.0
    assert parse_expression("x**3")(2.0, 0.0) == 8.0


@pytest.mark.parametrize("src", ["", "   ", "z + 1", "__import__('os')", "x.real", "sin(x, y)",
                                 "[x]", "x if y else 1", "True", "x < y", "cos(x=1)"])
def test_expression_rejects(src):
    with pytest.raises(ExpressionError):
        parse_expression(src)


def test_expression_syntax_error_has_column():
    with pytest.raises(ExpressionError, match="column"):
        parse_expression("x + (y")


def test_report_is_deterministic_and_ordered():
    rep = {"a": 0.1, "b": [1, 2.5, np.float64(1 / 3)], "c": {"z": np.int64(3), "flag": np.bool_(True)},
           "d": complex(1, -2), "e": float("inf"), "f": np.array([[1.0, 2.0]])}
    s1, s2 = io.dumps_report(rep), io.dumps_report(rep)
    assert s1 == s2
    data = json.loads(s1)
    assert list(data)[0] == "schema_version"
    assert data["schema_version"] == io.SCHEMA_VERSION
    assert data["b"][2] == 1 / 3
    assert data["d"] == [1.0, -2.0]
    assert data["e"] is None
    assert data["c"] == {"z": 3, "flag": True}
    assert "0.33333333333333331" in s1
    with pytest.raises(TypeError):
        io.dumps_report({"x": object()})


def test_write_report_and_csv(tmp_path, capsys):
    path = tmp_path / "r.json"
    text = io.write_report(str(path), {"k": 1.5})
    assert path.read_text() == text
    io.write_report("-", {"k": 1.5})
    assert capsys.readouterr().out == text
    mesh = DomainMesh.build(disk(1.0), 1 / 4)
    grid = tmp_path / "g.csv"
    io.write_grid_csv(grid, mesh, mesh.x + mesh.y, "f")
    lines = grid.read_text().splitlines()
    assert lines[0] == "x,y,f"
    assert len(lines) == mesh.n + 1
    x, y, f = map(float, lines[1].split(","))
    assert f == x + y


def test_load_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "h": 0.1,\n  "a": \n}\n')
    with pytest.raises(io.ConfigError, match=r"line 4, column 1"):
        io.load_json(bad)
    with pytest.raises(io.ConfigError, match="missing.json"):
        io.load_json(tmp_path / "missing.json")
    good = tmp_path / "good.json"
    good.write_text('{"h": 0.1}')
    assert io.load_json(good) == {"h": 0.1}


def test_require():
    obj = {"h": 0.1, "n": 3, "flag": True, "s": "x"}
    assert io.require(obj, "h", float) == 0.1
    assert io.require(obj, "n", (int, float)) == 3
    with pytest.raises(io.ConfigError, match="'missing'"):
        io.require(obj, "missing", float)
    with pytest.raises(io.ConfigError, match="'s' must be float"):
        io.require(obj, "s", float)
    with pytest.raises(io.ConfigError):
        io.require(obj, "flag", (int, float))
