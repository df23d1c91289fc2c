"""Tabular experiment output: per-trial rows, per-grid-point aggregates,
CSV/JSON writers and the reproduction manifest."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__

# Columns excluded from CSV so repeated runs are byte-identical.
NONDETERMINISTIC = ("wall_time_s",)


def format_value(v) -> str:
    if v is None:
        return ""
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
        return repr(v)
    return str(v)


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return None
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


@dataclass
class ResultTable:
    """Trial rows plus one aggregate row per grid point.

    ``columns`` is the stable CSV header for ``kind``; rows are dicts keyed by
    column name (missing keys are written as empty cells).
    """

    kind: str
    columns: list
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def trial_rows(self, **match) -> list:
        return [r for r in self.rows if all(_eq(r.get(k), v) for k, v in match.items())]

    def aggregate_rows(self, **match) -> list:
        return [r for r in self.aggregates if all(_eq(r.get(k), v) for k, v in match.items())]

    def column(self, name: str, rows=None) -> np.ndarray:
        rows = self.aggregates if rows is None else rows
        return np.array([np.nan if r.get(name) is None else float(r[name]) for r in rows])

    def to_csv_string(self) -> str:
        cols = [c for c in self.columns if c not in NONDETERMINISTIC]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([format_value(r.get(c)) for c in cols])
        for r in self.aggregates:
            w.writerow([format_value(r.get(c)) for c in cols])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_string())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "columns": list(self.columns),
            "rows": _json_value(self.rows),
            "aggregates": _json_value(self.aggregates),
            "metadata": _json_value(self.metadata),
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def _eq(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, (int, float)):
        return a == b or (math.isinf(a) and math.isinf(b) and a > 0 and b > 0)
    return a == b


def aggregate(rows: list, key_columns: list, numeric_columns: list, std_columns: dict) -> list:
    """Mean over non-skipped trial rows per grid point.

    ``std_columns`` maps an output std column to the trial column it
    summarizes. Grid points appear in first-seen order.
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault(r["grid_index"], []).append(r)
    out = []
    for gi, members in groups.items():
        ok = [r for r in members if r.get("status", "ok") == "ok"]
        agg = {"row_type": "aggregate", "grid_index": gi}
        for k in key_columns:
            agg[k] = members[0].get(k)
        agg["n_trials"] = len(members)
        agg["n_skipped"] = len(members) - len(ok)
        agg["status"] = "ok" if ok else "skipped"
        for c in numeric_columns:
            vals = [r[c] for r in ok if r.get(c) is not None]
            agg[c] = float(np.mean(vals)) if vals else None
        for sc, c in std_columns.items():
            vals = [r[c] for r in ok if r.get(c) is not None]
            agg[sc] = float(np.std(vals, ddof=1)) if len(vals) > 1 else (0.0 if vals else None)
        out.append(agg)
    return out


def build_manifest(cfg_dict: dict, table: ResultTable, outputs: list) -> dict:
    import numba
    import scipy

    return {
        "tool": "mdgsim",
        "version": __version__,
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
        "kind": table.kind,
        "config": cfg_dict,
        "resolved": _json_value(table.metadata.get("resolved", {})),
        "seeds": _json_value(table.metadata.get("seeds", [])),
        "outputs": list(outputs),
    }


def write_outputs(table: ResultTable, cfg_dict: dict, out_dir) -> dict:
    """Write ``results.csv``, ``results.json`` and ``manifest.json`` to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table.write_csv(out / "results.csv")
    table.write_json(out / "results.json")
    manifest = build_manifest(cfg_dict, table, ["results.csv", "results.json"])
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return manifest
