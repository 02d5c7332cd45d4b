"""Deterministic JSON/CSV serialization for reports and fields."""
import csv
import json
import math

import numpy as np

SCHEMA_VERSION = "1.0"


def _fmt(x):
    return format(float(x), ".17g")


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _Float(obj)
    if isinstance(obj, complex):
        return [_Float(obj.real), _Float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class _Float(float):
    """Float marker so the encoder can emit fixed 17-significant-digit text."""


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, _Float):
        return "null" if not math.isfinite(obj) else _fmt(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(obj)


def dumps_report(report, indent=2):
    """Serialize a report dict; floats use 17 significant digits, non-finite become null."""
    data = {"schema_version": SCHEMA_VERSION}
    data.update(_to_jsonable(report))
    return _encode(data, indent, 0) + "\n"


def write_report(path, report):
    text = dumps_report(report)
    if path in (None, "-"):
        print(text, end="")
    else:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_grid_csv(path, mesh, values, name="value"):
    """Field on a DomainMesh as rows (x, y, value)."""
    write_csv(path, ["x", "y", name], zip(mesh.x.astype(float), mesh.y.astype(float), np.asarray(values, float)))


class ConfigError(ValueError):
    """Malformed input file; the message carries line/column or field names."""


def load_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def require(obj, field, kind, path="input"):
    """Fetch ``obj[field]`` and check its type, raising ConfigError naming the field."""
    if not isinstance(obj, dict) or field not in obj:
        raise ConfigError(f"{path}: missing field {field!r}")
    v = obj[field]
    ok = isinstance(v, kind) and not (isinstance(v, bool) and bool not in (kind if isinstance(kind, tuple) else (kind,)))
    if not ok:
        names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ConfigError(f"{path}: field {field!r} must be {names}, got {type(v).__name__}")
    return v
