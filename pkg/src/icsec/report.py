"""Canonical CSV/JSON serialization of tabular results.

Floats are written with 12 significant digits, columns keep their declared
order, and nothing time-dependent is embedded, so equal inputs give equal
bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

PRECISION = 12

SCHEMAS = {
    "align": ("K", "T", "M", "|S|", "fraction"),
    "rates": ("user", "R_comb", "penalty", "R_secure"),
    "sweep": ("P", "sum_rate", "ssdf", "penalty_check"),
    "toy": ("check", "statistic", "value", "bound", "stderr"),
    "check": ("check", "statistic", "value", "bound", "stderr"),
}


def _canon(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, int):
        return v
    if hasattr(v, "item"):  # numpy scalars
        return _canon(v.item())
    if isinstance(v, float):
        if not math.isfinite(v):
            return None
        return float(f"{v:.{PRECISION}g}")
    if isinstance(v, dict):
        return {str(k): _canon(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_canon(x) for x in v]
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _cell(v) -> str:
    v = _canon(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{PRECISION}g}"
    return str(v)


@dataclass
class Report:
    kind: str
    rows: list[dict]
    config: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def columns(self) -> tuple[str, ...]:
        return SCHEMAS[self.kind]

    def to_obj(self) -> dict:
        return {
            "kind": self.kind,
            "version": self.version,
            "config": _canon(self.config),
            "summary": _canon(self.summary),
            "columns": list(self.columns),
            "rows": [[_canon(r.get(c)) for c in self.columns] for r in self.rows],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "Report":
        if obj.get("kind") not in SCHEMAS:
            raise ValueError(f"unknown report kind {obj.get('kind')!r}")
        cols = SCHEMAS[obj["kind"]]
        if list(obj["columns"]) != list(cols):
            raise ValueError("column list does not match the schema")
        rows = [dict(zip(cols, r)) for r in obj["rows"]]
        return cls(obj["kind"], rows, obj.get("config", {}), obj.get("summary", {}), obj["version"])


def emit_report(report: Report, fmt: str = "csv") -> bytes:
    """Serialize ``report`` as ``"csv"`` or ``"json"``.

    CSV output opens with ``#`` comment lines carrying the artifact version,
    the resolved configuration and the summary, followed by the header row.
    """
    if fmt == "json":
        return (json.dumps(report.to_obj(), indent=2, allow_nan=False) + "\n").encode()
    if fmt != "csv":
        raise ValueError(f"unsupported format {fmt!r}; use 'csv' or 'json'")
    buf = io.StringIO()
    buf.write(f"# icsec {report.version} {report.kind}\n")
    buf.write("# config: " + json.dumps(_canon(report.config), sort_keys=True) + "\n")
    if report.summary:
        buf.write("# summary: " + json.dumps(_canon(report.summary), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for r in report.rows:
        w.writerow([_cell(r.get(c)) for c in report.columns])
    return buf.getvalue().encode()


def parse_json_report(data: bytes | str) -> Report:
    return Report.from_obj(json.loads(data))


def read_csv_config(path) -> dict:
    """Configuration embedded in a CSV artifact."""
    for line in Path(path).read_text().splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise ValueError(f"{path} has no embedded config")


def write_atomic(path, data: bytes) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
