"""CSV and binary writers/readers for traces, field maps and snapshots.

Every CSV begins with ``#``-prefixed header lines (``# key: value``) that
echo the parameters and unit conventions, followed by one column-name row.
Floats are written with ``repr`` so files are byte-identical across reruns.

Binary snapshot layout (little-endian): int64 n_points, float64 x_max,
float64 t, then n_points interleaved (re, im) float64 pairs.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .solver import Grid, WaveField

UNITS = "hbar = m = 1; omega = k^2/2; energies and g1d in the same units"

_SNAPSHOT_HEADER = struct.Struct("<qdd")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def header_lines(meta: dict | None) -> list[str]:
    lines = [f"# units: {UNITS}"]
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {_fmt(value)}")
    return lines


def write_csv(path, columns, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for line in header_lines(meta):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """Return (meta, columns, rows-as-strings)."""
    meta, data = {}, []
    with Path(path).open() as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    data = [row for row in reader]
    return meta, columns, data


def write_trace_csv(path, trace, meta=None) -> Path:
    from .diagnostics import TRACE_COLUMNS

    extra = {} if trace.blowup_time is None else {"blowup_time": trace.blowup_time}
    return write_csv(path, TRACE_COLUMNS, trace.rows(), {**(meta or {}), **extra})


def write_field_map_csv(path, fields: dict, meta=None) -> Path:
    """Long-format exact-field map with columns x, t, Re psi, Im psi, R^2, theta, theta_x, J.

    Undefined phases are written as ``nan`` and divergent gradients as ``inf``.
    """
    cols = ("x", "t", "re_psi", "im_psi", "density", "phase", "theta_x", "flow")
    flat = [np.ravel(fields[c]) for c in cols]
    return write_csv(path, cols, zip(*flat), meta)


def write_snapshot_csv(path, f: WaveField, meta=None) -> Path:
    m = {"t": f.t, "n_points": f.grid.n_points, "x_max": f.grid.x_max, **(meta or {})}
    return write_csv(path, ("x", "re_psi", "im_psi"), zip(f.grid.x, f.values.real, f.values.imag), m)


def write_snapshot_binary(path, f: WaveField) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = np.empty(2 * f.grid.n_points, dtype="<f8")
    payload[0::2] = f.values.real
    payload[1::2] = f.values.imag
    with path.open("wb") as fh:
        fh.write(_SNAPSHOT_HEADER.pack(f.grid.n_points, f.grid.x_max, f.t))
        fh.write(payload.tobytes())
    return path


def read_snapshot_binary(path, k: float) -> WaveField:
    """Inverse of :func:`write_snapshot_binary`; ``k`` rebuilds the grid."""
    raw = Path(path).read_bytes()
    n, x_max, t = _SNAPSHOT_HEADER.unpack_from(raw)
    payload = np.frombuffer(raw, dtype="<f8", offset=_SNAPSHOT_HEADER.size)
    if payload.size != 2 * n:
        raise ValueError(f"snapshot payload has {payload.size} doubles, expected {2 * n}")
    return WaveField(Grid(int(n), x_max, k), t, payload[0::2] + 1j * payload[1::2])
