"""Report serialisation: header blocks, JSON and CSV writers."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__

# keys that change how a run executes but not what it computes
RUNTIME_KEYS = ("workers", "out", "no_figure", "config", "handler", "command")


def jsonable(obj):
    """Convert results to plain JSON types; infinities become the string "inf"."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "as_dict"):
            return jsonable(obj.as_dict())
        return jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, Path):
        return str(obj)
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def header(command: str, config: dict, seed=None) -> dict:
    cfg = {k: v for k, v in config.items() if k not in RUNTIME_KEYS}
    return {"tool": "nsreg", "version": __version__, "command": command, "seed": seed,
            "config": jsonable(cfg), "config_sha256": config_hash(cfg)}


def dumps_json(head: dict, body) -> str:
    return json.dumps({"header": head, "result": jsonable(body)}, indent=2, allow_nan=False) + "\n"


def dumps_csv(head: dict, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: nsreg {head['version']}\n")
    buf.write(f"# command: {head['command']}\n")
    buf.write(f"# seed: {head['seed']}\n")
    buf.write(f"# config: {json.dumps(head['config'], sort_keys=True)}\n")
    buf.write(f"# config_sha256: {head['config_sha256']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if v is None else _csv_cell(v) for v in row])
    return buf.getvalue()


def _csv_cell(v):
    v = jsonable(v)
    if isinstance(v, float):
        return repr(v)
    return v


def write_text(path, text: str):
    if path is None or str(path) == "-":
        import sys
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_report(path) -> dict:
    """Load a JSON report, returning its result block (or the whole file if unwrapped)."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "result" in data and "header" in data:
        return data["result"]
    return data
