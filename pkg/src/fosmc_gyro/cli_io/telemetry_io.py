"""Telemetry CSV and flat ``key=value`` metrics files."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from ..sim import Metrics, Telemetry

__all__ = ["CSV_COLUMNS", "telemetry_to_csv", "write_telemetry_csv", "read_telemetry_csv", "format_metrics", "write_metrics", "read_metrics"]

# (csv prefix, telemetry attribute) for the two-axis fields
_VECTOR_COLUMNS = (
    ("q", "q"),
    ("qd", "q_d"),
    ("e", "e"),
    ("qdot", "qdot"),
    ("s", "s"),
    ("u", "u_total"),
    ("ueq", "u_eq"),
    ("us", "u_s"),
    ("ustc", "u_stc"),
)

CSV_COLUMNS = ("t",) + tuple(f"{p}_{a}" for p, _ in _VECTOR_COLUMNS for a in "xy") + ("V", "Vdot")


def _table(tel: Telemetry) -> np.ndarray:
    cols = [tel.t[:, None]] + [getattr(tel, attr) for _, attr in _VECTOR_COLUMNS] + [tel.V[:, None], tel.Vdot[:, None]]
    return np.hstack(cols)


def telemetry_to_csv(tel: Telemetry) -> str:
    """CSV text, 17 significant digits so every double round-trips exactly."""
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    np.savetxt(buf, _table(tel), fmt="%.17g", delimiter=",")
    return buf.getvalue()


def write_telemetry_csv(tel: Telemetry, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(telemetry_to_csv(tel))


def read_telemetry_csv(path) -> Telemetry:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected telemetry header {header!r}")
        rows = [[float(x) for x in row] for row in reader]
    for i, row in enumerate(rows):
        if len(row) != len(CSV_COLUMNS):
            raise ValueError(f"{path}: row {i + 1} has {len(row)} columns")
    data = np.array(rows, dtype=float).reshape(-1, len(CSV_COLUMNS))
    arrays = {"t": data[:, 0], "V": data[:, -2], "Vdot": data[:, -1]}
    for i, (_, attr) in enumerate(_VECTOR_COLUMNS):
        arrays[attr] = data[:, 1 + 2 * i: 3 + 2 * i]
    return Telemetry.from_arrays(**arrays)


def format_metrics(m: Metrics | dict, prefix: str = "") -> str:
    d = m.as_dict() if isinstance(m, Metrics) else m
    lines = []
    for k, v in d.items():
        if isinstance(v, bool):
            txt = str(v).lower()
        elif isinstance(v, float):
            txt = "inf" if math.isinf(v) else repr(v)
        else:
            txt = str(v)
        lines.append(f"{prefix}{k}={txt}")
    return "\n".join(lines) + "\n"


def write_metrics(m: Metrics | dict, path) -> None:
    Path(path).write_text(format_metrics(m))


def read_metrics(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        k, _, v = line.partition("=")
        if v in ("true", "false"):
            out[k] = v == "true"
        else:
            try:
                out[k] = float(v)
            except ValueError:
                out[k] = v
    return out
