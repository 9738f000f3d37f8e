"""Deterministic JSON / CSV serialization of transcripts and tables.

Complex numbers become ``[re, im]`` pairs, density matrices carry their
layout, and no timestamps or other run-varying data ever enter the payload,
so identical configurations produce byte-identical files.  CSV numbers are
formatted with 12 significant digits and a ``.`` decimal separator,
independent of locale.
"""

from __future__ import annotations

import json
from typing import Iterable

import numpy as np

from .linalg import DensityMatrix
from .protocols import ProtocolTranscript

SCHEMA = "qswitch-lab/1"


def fmt(x) -> str:
    """12-significant-digit decimal rendering for CSV cells."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def complex_pairs(arr: np.ndarray):
    """Nested lists of [re, im] pairs."""
    a = np.asarray(arr, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def density_to_dict(dm: DensityMatrix) -> dict:
    return {
        "labels": list(dm.layout.labels),
        "dims": list(dm.layout.dims),
        "entries": complex_pairs(dm.entries),
    }


def transcript_to_dict(t: ProtocolTranscript, header: dict | None = None) -> dict:
    return {
        "schema": SCHEMA,
        "header": header or {},
        "protocol": t.protocol_id,
        "params": t.params,
        "stages": [{"name": s.name, "state": density_to_dict(s.state)} for s in t.stages],
        "branches": [
            {
                "controller_outcome": b.controller_outcome,
                "probability": b.probability,
                "receiver_outcomes": list(b.receiver_outcomes)
                if b.receiver_outcomes is not None
                else None,
                "decoded": b.decoded,
                "null": b.state is None,
                "metrics": _plain(b.metrics),
            }
            for b in t.branches
        ],
        "metrics": _plain(t.metrics),
    }


def _plain(obj):
    """Recursively convert numpy scalars/arrays into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def dumps_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def transcript_metric_row(t: ProtocolTranscript) -> tuple[list[str], list[str]]:
    """Flat (header, row) pair of the transcript's scalar metrics."""
    cols = ["protocol"]
    row = [t.protocol_id]
    for k in sorted(t.params):
        cols.append(k)
        row.append(str(t.params[k]))
    for k in sorted(t.metrics):
        v = t.metrics[k]
        if isinstance(v, (bool, int, float, np.floating, np.integer, np.bool_)):
            cols.append(k)
            row.append(fmt(v))
    return cols, row


def sweep_csv_lines(table: dict) -> list[str]:
    """CSV rendering of a necessity-sweep table, deterministic row order."""
    rows = table["rows"]
    d = table["d"]
    cols = [f"lambda_{j}" for j in range(d)]
    extra = [k for k in ("metric", "top_schmidt_gap", "resource_concurrence",
                         "optimal_decode_success", "is_perfect") if k in rows[0]]
    header = ",".join(cols + extra)
    lines = [header]
    for r in rows:
        cells = [fmt(s) for s in r["spectrum"]]
        cells += [fmt(r[k]) for k in extra]
        lines.append(",".join(cells))
    return lines


def write_text(path: str, lines: Iterable[str] | str) -> None:
    if isinstance(lines, str):
        data = lines
    else:
        data = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)
