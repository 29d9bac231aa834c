"""Deterministic table and report writers."""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    """17 significant digits for floats, so values round-trip bit for bit."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path: Path, header: list[str], rows, config_hash: str) -> Path:
    """CSV with a ``# config_hash=...`` comment line before the header."""
    lines = [f"# config_hash={config_hash}"]
    buf = []

    class _W:
        def write(self, s):
            buf.append(s)

    w = csv.writer(_W(), lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return atomic_write(path, "\n".join(lines) + "\n" + "".join(buf))


def read_csv(path: Path) -> tuple[str, list[str], list[list[str]]]:
    lines = Path(path).read_text().splitlines()
    h = lines[0].split("=", 1)[1] if lines and lines[0].startswith("# config_hash=") else ""
    rows = list(csv.reader(lines[1:]))
    return h, rows[0], rows[1:]


def write_json(path: Path, obj, config_hash: str) -> Path:
    data = {"config_hash": config_hash, **_jsonable(obj)}
    return atomic_write(path, json.dumps(data, sort_keys=True, indent=2) + "\n")
