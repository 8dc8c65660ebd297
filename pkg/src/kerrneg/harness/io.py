"""Output writers: RFC-4180 CSV with 12 significant digits plus a JSON sidecar."""

from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__


@dataclass
class Table:
    """A named block of rows; ``columns`` fixes the CSV header."""

    name: str
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.asarray([r[i] for r in self.rows])


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.12g}"
    return str(v)


def write_csv(path, table: Table) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> Table:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return Table(Path(path).stem, rows[0], [tuple(r) for r in rows[1:]])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def write_sidecar(path, config: dict, config_hash: str, wall_time: float, tables: list[Table],
                  extra: dict | None = None) -> Path:
    doc = {
        "config": config,
        "config_hash": config_hash,
        "library": {"name": "kerrneg", "version": __version__},
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": wall_time,
        "outputs": [{"table": t.name, "file": f"{t.name}.csv", "rows": len(t.rows),
                     "meta": _jsonable(t.meta)} for t in tables],
    }
    if extra:
        doc["summary"] = _jsonable(extra)
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
