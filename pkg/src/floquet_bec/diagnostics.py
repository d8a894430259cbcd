"""Fidelity, conserved quantities and numerical vortex detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GridMismatch
from .exact import VortexNode
from .solver import WaveField

TRACE_COLUMNS = ("t", "F", "norm", "mean_density", "spread", "max_density_dev", "flags")


def _overlap_fidelity(a: np.ndarray, b: np.ndarray, dx: float) -> float:
    na = float(np.vdot(a, a).real) * dx
    nb = float(np.vdot(b, b).real) * dx
    s = abs(np.vdot(a, b)) * dx
    return min(1.0, s * s / (na * nb))


def fidelity(num: WaveField, ex: WaveField) -> float:
    """|<num|ex>|^2 / (<num|num> <ex|ex>) by rectangle-rule quadrature."""
    if num.grid != ex.grid:
        raise GridMismatch(f"grids differ: {num.grid} vs {ex.grid}")
    if not math.isclose(num.t, ex.t, rel_tol=1e-12, abs_tol=1e-12):
        raise GridMismatch(f"fields are at different times {num.t} and {ex.t}")
    return _overlap_fidelity(num.values, ex.values, num.grid.dx)


def conserved_norm(field: WaveField) -> float:
    """Total atom number, the rectangle-rule integral of |psi|^2."""
    return field.norm()


def density_uniformity(field: WaveField) -> tuple[float, float]:
    """Spatial mean of |psi|^2 and the relative spread (max - min)/mean."""
    d = field.density
    mean = float(d.mean())
    return mean, float((d.max() - d.min()) / mean)


@dataclass
class DiagnosticsTrace:
    times: np.ndarray
    fidelity: np.ndarray
    norm: np.ndarray
    mean_density: np.ndarray
    spread: np.ndarray
    max_density_dev: np.ndarray
    flags: list[str] = field(default_factory=list)
    blowup_time: float | None = None

    def __len__(self):
        return len(self.times)

    def rows(self):
        for i in range(len(self.times)):
            yield (
                self.times[i],
                self.fidelity[i],
                self.norm[i],
                self.mean_density[i],
                self.spread[i],
                self.max_density_dev[i],
                self.flags[i] if i < len(self.flags) else "",
            )

    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - self.norm[0])) / self.norm[0])


class TraceRecorder:
    """Accumulates samples while a run progresses."""

    def __init__(self, reference=None):
        self.reference = reference
        self._rows = []
        self._blowup = None

    @property
    def last_time(self):
        return self._rows[-1][0] if self._rows else None

    def record(self, f: WaveField, flag: str = ""):
        dens = f.density
        mean = float(dens.mean())
        spread = float((dens.max() - dens.min()) / mean) if mean > 0 else math.nan
        F = dev = math.nan
        if self.reference is not None:
            ref = np.asarray(self.reference(f.t))
            F = _overlap_fidelity(f.values, ref, f.grid.dx)
            dev = float(np.max(np.abs(dens - np.abs(ref) ** 2)))
        self._rows.append((f.t, F, f.norm(), mean, spread, dev, flag))

    def mark_blowup(self, t):
        self._blowup = t
        self._rows.append((t, math.nan, math.nan, math.nan, math.nan, math.nan, "non-finite"))

    def trace(self) -> DiagnosticsTrace:
        cols = list(zip(*self._rows)) if self._rows else [()] * 7
        arr = [np.array(c, dtype=float) for c in cols[:6]]
        return DiagnosticsTrace(*arr, flags=list(cols[6]), blowup_time=self._blowup)


def detect_vortices_numerical(snapshots: Sequence[WaveField]) -> list[VortexNode]:
    """Find phase singularities on the (x, t) lattice spanned by the snapshots.

    Each plaquette between neighbouring grid points and consecutive
    snapshots is traversed counterclockwise (x to the right, t upward); a
    net phase of +-2 pi marks a node, reported at the cell centre.  x is
    periodic.  ``n`` is the nearest half-period index t*omega/pi, and
    ``branch``/``l`` follow from which half of the lattice cell the node
    sits in.  Snapshots must bracket node times; samples placed exactly at
    a node time are ambiguous for the exact state and should be offset.
    """
    if len(snapshots) < 2:
        return []
    grid = snapshots[0].grid
    for s in snapshots:
        if s.grid != grid:
            raise GridMismatch("snapshots must share one grid")
    psi = np.stack([s.values for s in snapshots])
    ts = np.array([s.t for s in snapshots])
    right = np.roll(psi, -1, axis=1)

    def dphase(u, v):
        return np.angle(v / u)

    with np.errstate(divide="ignore", invalid="ignore"):
        circ = (
            dphase(psi[:-1], right[:-1])  # bottom edge, +x
            + dphase(right[:-1], right[1:])  # right edge, +t
            + dphase(right[1:], psi[1:])  # top edge, -x
            + dphase(psi[1:], psi[:-1])  # left edge, -t
        )
    winding = np.rint(np.nan_to_num(circ) / (2 * math.pi)).astype(int)
    k = grid.k
    omega = 0.5 * k * k
    nodes = []
    for i, j in zip(*np.nonzero(winding)):
        x = grid.x[j] + 0.5 * grid.dx
        if x >= grid.x_max:
            x -= grid.length
        t = 0.5 * (ts[i] + ts[i + 1])
        branch = 1 if math.sin(k * x) >= 0 else -1
        kx = k * x / (2 * math.pi)
        l = math.floor(kx) if branch > 0 else math.ceil(kx)
        n = max(0, int(round(t * omega / math.pi)))
        nodes.append(VortexNode(float(x), float(t), n, int(l), branch, int(winding[i, j])))
    nodes.sort(key=lambda nd: (nd.t, nd.x))
    return nodes
