"""CSV and JSON writers.

Floats are written with ``repr`` (shortest round-trip form) and JSON keys
are sorted, so identical results give byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import IoFailure


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path, header, columns) -> Path:
    """Write equal-length ``columns`` under ``header``."""
    path = Path(path)
    cols = [np.asarray(c, dtype=float) for c in columns]
    if len(cols) != len(header):
        raise ValueError(f"{len(header)} header names for {len(cols)} columns")
    n = {c.shape[0] for c in cols}
    if len(n) > 1:
        raise ValueError(f"columns have different lengths {sorted(n)}")
    rows = np.column_stack(cols) if cols else np.empty((0, 0))
    lines = [",".join(header)]
    lines.extend(",".join(map(_fmt, row)) for row in rows)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path):
    """Header list and a 2-D float array."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def trajectory_header(N, with_u=False):
    names = ["t"]
    for var in ("theta", "omega", "E") + (("u",) if with_u else ()):
        names += [f"{var}_{i}" for i in range(1, N + 1)]
    return names


def write_trajectory_csv(path, traj) -> Path:
    with_u = traj.states.shape[1] == 4 * traj.N
    header = trajectory_header(traj.N, with_u)
    cols = [traj.times] + [traj.states[:, k] for k in range(traj.states.shape[1])]
    return write_csv(path, header, cols)


def write_bulk_csv(path, series, f0=50.0, extra=None) -> Path:
    """Node means plus ``omega_bar_display = f0 + omega_bar``; ``extra`` is an
    ordered mapping of additional named columns."""
    header = ["t", "theta_bar", "omega_bar", "E_bar", "omega_bar_display"]
    cols = [series.times, series.theta_bar, series.omega_bar, series.E_bar, f0 + series.omega_bar]
    for name, col in (extra or {}).items():
        header.append(name)
        cols.append(col)
    return write_csv(path, header, cols)


def write_return_time_csv(path, rows, key="gamma") -> Path:
    """``rows`` of (key value, ReturnTimeResult); unconverged runs get NaN."""
    vals = [float(r[0]) for r in rows]
    rt = [r[1].return_time if r[1].return_time is not None else math.nan for r in rows]
    conv = [1.0 if r[1].converged else 0.0 for r in rows]
    path = Path(path)
    lines = [f"{key},return_time,converged"]
    for v, t, c in zip(vals, rt, conv):
        lines.append(f"{_fmt(v)},{_fmt(t)},{'true' if c else 'false'}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def jsonable(obj):
    """Recursively convert numpy types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(obj), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path
