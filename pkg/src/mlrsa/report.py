"""Tabular artifacts and their CSV/JSON writers.

Layout of a CSV artifact::

    # config.mode = compare
    # config.k = 2
    ...
    # result.gate.gap = pass
    tau,sim_mean,sim_stderr,...
    0.5,0.2281...,...

Only ``# config.*`` lines are read back as configuration.  Floats are written
with ``repr`` (shortest round-trip form) and nothing time-dependent is
recorded, so a re-run with the same configuration is byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Artifact:
    """One table plus result metadata, ready to be written."""

    columns: list[str]
    rows: list[tuple]
    results: dict = field(default_factory=dict)
    passed: bool | None = None
    companions: dict = field(default_factory=dict)   # suffix -> Artifact
    plot: object = None                              # callable(path) or None


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _json_cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def render_csv(config_items, art: Artifact) -> str:
    buf = io.StringIO()
    for k, v in config_items:
        buf.write(f"# config.{k} = {v}\n")
    for k, v in art.results.items():
        buf.write(f"# result.{k} = {_cell(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(art.columns)
    for row in art.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(config_items, art: Artifact) -> str:
    doc = {
        "config": dict(config_items),
        "results": {k: _json_cell(v) for k, v in art.results.items()},
        "columns": list(art.columns),
        "records": [dict(zip(art.columns, map(_json_cell, row))) for row in art.rows],
    }
    return json.dumps(doc, indent=1) + "\n"


def write_artifact(path: Path, fmt: str, config_items, art: Artifact) -> list[Path]:
    """Write `art` and its companions; returns the paths written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(config_items, art) if fmt == "csv" else render_json(config_items, art)
    path.write_text(text)
    written = [path]
    for suffix, sub in art.companions.items():
        sub_path = path.with_name(f"{path.stem}.{suffix}{path.suffix}")
        written += write_artifact(sub_path, fmt, config_items, sub)
    return written


def read_csv_table(path) -> tuple[dict, list[str], list[list[str]]]:
    """Parse a CSV artifact into (metadata, header, rows); metadata keeps prefixes."""
    meta, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]
