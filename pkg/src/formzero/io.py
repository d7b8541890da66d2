"""Formation files and deterministic report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaViolation
from .framework import FormationSpec, validate_spec

BUNDLED = ("paper-4agent.json", "paper-4bar.json", "triangle.json")
_TOP_KEYS = {"name", "dimension", "nodes", "edges"}
_NODE_KEYS = {"id", "position"}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def spec_from_dict(data) -> FormationSpec:
    """Validate a decoded formation document, reporting every violation at once."""
    bad: list[str] = []
    if not isinstance(data, dict):
        raise SchemaViolation(["top level must be an object"])
    for key in sorted(set(data) - _TOP_KEYS):
        bad.append(f"unknown key {key!r}")
    for key in ("name", "nodes", "edges"):
        if key not in data:
            bad.append(f"missing key {key!r}")
    name = data.get("name", "")
    if "name" in data and not isinstance(name, str):
        bad.append("name must be a string")
    dimension = data.get("dimension", 2)
    if dimension != 2 or not _is_int(dimension):
        bad.append(f"dimension must be 2, got {dimension!r}")

    nodes = []
    raw_nodes = data.get("nodes", [])
    if not isinstance(raw_nodes, list):
        bad.append("nodes must be a list")
        raw_nodes = []
    for k, node in enumerate(raw_nodes):
        where = f"nodes[{k}]"
        if not isinstance(node, dict):
            bad.append(f"{where} must be an object")
            continue
        for key in sorted(set(node) - _NODE_KEYS):
            bad.append(f"{where}: unknown key {key!r}")
        node_id = node.get("id")
        pos = node.get("position")
        ok = True
        if not _is_int(node_id) or node_id <= 0:
            bad.append(f"{where}.id must be a positive integer, got {node_id!r}")
            ok = False
        if not (isinstance(pos, list) and len(pos) == 2 and all(_is_number(c) for c in pos)):
            bad.append(f"{where}.position must be two finite numbers, got {pos!r}")
            ok = False
        if ok:
            nodes.append((node_id, (float(pos[0]), float(pos[1]))))

    edges = []
    raw_edges = data.get("edges", [])
    if not isinstance(raw_edges, list):
        bad.append("edges must be a list")
        raw_edges = []
    for k, edge in enumerate(raw_edges):
        if not (isinstance(edge, list) and len(edge) == 2 and all(_is_int(v) for v in edge)):
            bad.append(f"edges[{k}] must be a pair of integer node ids, got {edge!r}")
            continue
        edges.append((edge[0], edge[1]))

    spec = FormationSpec(name=name if isinstance(name, str) else "", nodes=tuple(nodes), edges=tuple(edges))
    bad.extend(str(p) for p in validate_spec(spec))
    if bad:
        raise SchemaViolation(bad)
    return spec


def parse_formation_text(text: str) -> FormationSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return spec_from_dict(data)


def resolve_formation_path(path) -> Path:
    """Existing file path, or a bundled fixture addressed by file name."""
    p = Path(path)
    if p.exists():
        return p
    if p.name in BUNDLED:
        return Path(str(resources.files("formzero") / "formations" / p.name))
    raise FileNotFoundError(f"formation file not found: {path}")


def parse_formation_file(path) -> FormationSpec:
    return parse_formation_text(resolve_formation_path(path).read_text())


def bundled_formation(name: str) -> FormationSpec:
    if not name.endswith(".json"):
        name += ".json"
    return parse_formation_file(name)


def spec_to_dict(spec: FormationSpec) -> dict:
    return {
        "name": spec.name,
        "dimension": spec.dimension,
        "nodes": [{"id": k, "position": [x, y]} for k, (x, y) in spec.nodes],
        "edges": [[a, b] for a, b in spec.edges],
    }


def emit_formation(spec: FormationSpec) -> str:
    return dumps_json(spec_to_dict(spec))


# -- deterministic serialization ------------------------------------------

def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # str enums
        return obj.value
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if obj is None or obj is True or obj is False or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """JSON with floats at 17 significant digits; non-finite floats become null."""
    return _encode(_plain(obj), indent, 0) + "\n"


def _cell(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return format_float(v) if math.isfinite(v) else "nan"
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ";".join(_cell(x) for x in v)
    return str(v)


def dumps_csv(header, rows, comments=(), footer=()) -> str:
    """CSV text; ``comments`` lead and ``footer`` trails, each as ``# a,b,...`` lines."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for line in comments:
        buf.write("# " + ",".join(_cell(v) for v in line) + "\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    for line in footer:
        buf.write("# " + ",".join(_cell(v) for v in line) + "\n")
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
