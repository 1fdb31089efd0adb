"""Canonical JSON reports and CSV field dumps."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .grid import AXIS_NAMES, GridField

REPORT_SCHEMA = 1
SECTIONS = ("certificate", "solve", "probe", "study", "timings_ms")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError(f"non-finite number {v!r} cannot go into a report")
        return v
    return obj


def make_report(command: str, digest: str, **sections) -> dict:
    """Top-level report; sections given as ``None`` are left out."""
    out = {"schema": REPORT_SCHEMA, "command": command, "config_digest": digest}
    for name in SECTIONS:
        if sections.get(name) is not None:
            out[name] = sections[name]
    return _plain(out)


def dumps(report: dict) -> str:
    """Canonical text: sorted keys, two-space indent, shortest round-trip
    floats, trailing newline. ``dumps(json.loads(dumps(r))) == dumps(r)``."""
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_field_csv(path, u: GridField) -> None:
    """One row per interior node: multi-index, coordinates, value."""
    d = u.domain
    idx_cols = ["i", "j", "k"][: d.dim]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(idx_cols + list(AXIS_NAMES[: d.dim]) + ["value"])
    for row in range(d.n):
        w.writerow(
            [int(i) for i in d.indices[row]]
            + [repr(float(c)) for c in d.coordinates[row]]
            + [repr(float(u.values[row]))]
        )
    Path(path).write_text(buf.getvalue())
