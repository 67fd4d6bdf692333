"""Scan tables and their CSV / summary serialization."""
from __future__ import annotations

import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

SCHEMA = 1


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return "nan" if math.isnan(value) else format(value, ".17g")
    if isinstance(value, (tuple, list)):
        return " ".join(fmt(v) for v in value)
    return str(value)


@dataclass
class ScanTable:
    columns: Sequence[str]
    rows: list[tuple] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = list(self.columns).index(name)
        return [r[i] for r in self.rows]

    def to_csv(self, meta: dict | None = None) -> str:
        buf = io.StringIO()
        buf.write(metadata_line(meta or {}) + "\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(jsonable(self.summary), indent=2, sort_keys=True)


def metadata_line(meta: dict) -> str:
    return "# schema=%d %s" % (SCHEMA, json.dumps(jsonable(meta), sort_keys=True))


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "item"):  # numpy scalar
        return obj.item()
    return obj


def csv_body(text: str) -> str:
    """CSV text without its metadata comment line(s)."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def write_atomic(path: str | os.PathLike, text: str) -> None:
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
