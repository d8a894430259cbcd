"""Closed-form Floquet state and the fields derived from it.

The state is

    psi(x, t) = [a + b cos(kx) exp(-i omega t)] exp(-i EF t),
    a = sqrt(EF/g1d),  b = -alpha sgn(g1d) sqrt(-V0/g1d),

whose density equals (EF - V0 cos^2 kx - V1 cos kx cos omega t)/g1d with
V1 = 2 alpha sqrt(-EF V0).  The sign of ``b`` is what makes the nonlinear
term cancel V(x, t) exactly.

All field functions broadcast over numpy arrays.  Points where the field is
undefined are reported in-band rather than by raising: the phase is NaN at
zero-density points (:data:`PHASE_UNDEFINED`) and the phase gradient is
+inf where it diverges (:data:`DIVERGENT`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LoopAmbiguous
from .params import FloquetParams, Region, classify_region

PHASE_UNDEFINED = math.nan
DIVERGENT = math.inf

#: Density (relative to the field's energy scale) below which a point counts as a node.
NODE_RTOL = 1e-12


def _out(value):
    return value.item() if np.ndim(value) == 0 else value


def amplitudes(params: FloquetParams) -> tuple[float, float]:
    """Return (a, b): background amplitude and cos(kx) standing-wave amplitude."""
    g = params.g1d
    a = math.sqrt(params.EF / g)
    b = -params.alpha * math.copysign(1.0, g) * math.sqrt(-params.V0 / g)
    return a, b


def _density_scale(params):
    return (abs(params.EF) + abs(params.V0) + abs(params.V1)) / abs(params.g1d)


def bracket(x, t, params: FloquetParams):
    """Time-periodic factor a + b cos(kx) exp(-i omega t) of the state."""
    a, b = amplitudes(params)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return a + b * np.cos(params.k * x) * np.exp(-1j * params.omega * t)


def psi_exact(x, t, params: FloquetParams, include_energy_phase=True):
    """Exact Floquet wavefunction.

    ``include_energy_phase=False`` drops the exp(-i EF t) factor, which is the
    convention used for plotting phase maps.
    """
    u = bracket(x, t, params)
    if include_energy_phase:
        u = u * np.exp(-1j * params.EF * np.asarray(t, dtype=float))
    return _out(u)


def psi_exact_dt(x, t, params: FloquetParams):
    """Analytic time derivative of :func:`psi_exact`."""
    a, b = amplitudes(params)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    w, EF = params.omega, params.EF
    osc = b * np.cos(params.k * x) * np.exp(-1j * w * t)
    return _out(-1j * (EF * a + (EF + w) * osc) * np.exp(-1j * EF * t))


def potential_exact(x, t, params: FloquetParams):
    """Lattice plus driving field, V0 cos^2(kx) + V1 cos(kx) cos(omega t)."""
    ckx = np.cos(params.k * np.asarray(x, dtype=float))
    return _out(params.V0 * ckx**2 + params.V1 * ckx * np.cos(params.omega * np.asarray(t, dtype=float)))


def density(x, t, params: FloquetParams):
    """Atom-number density from the balance condition, (EF - V(x, t))/g1d."""
    return _out((params.EF - np.asarray(potential_exact(x, t, params))) / params.g1d)


def flow_density(x, t, params: FloquetParams):
    """Current J = R^2 theta_x = -k V1 sin(kx) sin(omega t) / (2 g1d); finite everywhere."""
    a, b = amplitudes(params)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return _out(a * b * params.k * np.sin(params.k * x) * np.sin(params.omega * t))


def _is_node(R2, params):
    return R2 <= NODE_RTOL * _density_scale(params)


def phase(x, t, params: FloquetParams, include_energy_phase=True):
    """Principal phase of the bracket, minus EF*t unless removed.

    Uses the two-argument arctangent, so values of the bracket term lie in
    (-pi, pi].  NaN marks zero-density points.  For a phase lifted to a
    continuous branch in t use :func:`phase_map`.
    """
    u = bracket(x, t, params)
    theta = np.angle(u)
    if include_energy_phase:
        theta = theta - params.EF * np.asarray(t, dtype=float)
    theta = np.where(_is_node(np.abs(u) ** 2, params), PHASE_UNDEFINED, theta)
    return _out(theta)


def phase_map(xs, ts, params: FloquetParams, include_energy_phase=False):
    """Phase on the (t, x) lattice, shape (len(ts), len(xs)).

    Each fixed-x column is unwrapped along t; node points stay NaN and the
    unwrap restarts after them.
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    u = bracket(xs[None, :], ts[:, None], params)
    raw = np.angle(u)
    nodes = _is_node(np.abs(u) ** 2, params)
    out = np.empty_like(raw)
    for j in range(raw.shape[1]):
        col = raw[:, j]
        bad = nodes[:, j]
        if not bad.any():
            out[:, j] = np.unwrap(col)
            continue
        # unwrap each run of valid samples separately
        start = 0
        for i in np.append(np.flatnonzero(bad), len(col)):
            if i > start:
                out[start:i, j] = np.unwrap(col[start:i])
            if i < len(col):
                out[i, j] = PHASE_UNDEFINED
            start = i + 1
    if include_energy_phase:
        out = out - params.EF * ts[:, None]
    return out


def phase_gradient(x, t, params: FloquetParams):
    """theta_x = J / R^2.

    Returns 0 where sin(kx) = 0 (the current vanishes identically along that
    line) and :data:`DIVERGENT` at zero-density points off that line.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    R2 = np.abs(bracket(x, t, params)) ** 2
    J = np.asarray(flow_density(x, t, params))
    sin_line = np.abs(np.sin(params.k * x)) <= 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        grad = J / R2
    grad = np.where(_is_node(R2, params), DIVERGENT, grad)
    grad = np.where(sin_line, 0.0, grad)
    return _out(grad)


def phase_time_derivative(x, t, params: FloquetParams):
    """theta_t including the -EF contribution; NaN at zero-density points.

    Approaching a node along t at fixed x the limit is -omega/2 - EF.
    """
    a, b = amplitudes(params)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    c = b * np.cos(params.k * x)
    w = params.omega
    R2 = np.abs(bracket(x, t, params)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        val = -params.EF - w * (c * c + a * c * np.cos(w * t)) / R2
    return _out(np.where(_is_node(R2, params), PHASE_UNDEFINED, val))


@dataclass(frozen=True)
class Background:
    """Amplitude and phase-derivative fields of the exact state at one time."""

    R2: np.ndarray
    R2_x: np.ndarray
    R2_t: np.ndarray
    J: np.ndarray
    J_x: np.ndarray
    V: np.ndarray
    theta_x: np.ndarray
    theta_xx: np.ndarray
    theta_t: np.ndarray
    clamped: np.ndarray

    @property
    def R(self):
        return np.sqrt(self.R2)

    @property
    def R_t(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.R2_t / (2.0 * self.R)


def background(x, t: float, params: FloquetParams, floor: float = 0.0) -> Background:
    """Analytic R^2, theta_x, theta_xx, theta_t (and helpers) at time ``t``.

    Wherever R^2 < floor * max(R^2) the denominators use the floor value
    instead; those points are flagged in ``clamped``.  With ``floor=0`` no
    clamping happens and exact nodes give non-finite coefficients.
    """
    a, b = amplitudes(params)
    x = np.asarray(x, dtype=float)
    k, w = params.k, params.omega
    ckx, skx = np.cos(k * x), np.sin(k * x)
    cwt, swt = math.cos(w * t), math.sin(w * t)
    c = b * ckx
    c_x = -b * k * skx
    R2 = a * a + c * c + 2.0 * a * c * cwt
    R2_x = 2.0 * c_x * (c + a * cwt)
    R2_t = -2.0 * a * c * w * swt
    J = a * b * k * skx * swt
    J_x = a * b * k * k * ckx * swt
    level = floor * float(np.max(R2)) if floor > 0 else 0.0
    clamped = R2 < level
    den = np.where(clamped, level, R2)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta_x = J / den
        theta_xx = (J_x * den - J * R2_x) / den**2
        theta_t = -params.EF - w * (c * c + a * c * cwt) / den
    V = params.V0 * ckx**2 + params.V1 * ckx * cwt
    return Background(R2, R2_x, R2_t, J, J_x, V, theta_x, theta_xx, theta_t, clamped)


@dataclass(frozen=True)
class VortexNode:
    """Zero-density point (x, t) of the exact state.

    ``charge`` is the winding of the phase counterclockwise around the node in
    the (x, t) plane with x on the horizontal axis.
    """

    x: float
    t: float
    n: int
    l: int
    branch: int
    charge: int


def node_charge(x: float, t: float, params: FloquetParams) -> int:
    """Topological charge from the local linearisation of the bracket.

    Near a simple zero psi ~ A dx + B dt; the orientation of that map gives
    sign(Im(conj(A) B)).  Returns 0 for a degenerate zero.
    """
    a, b = amplitudes(params)
    k, w = params.k, params.omega
    e = np.exp(-1j * w * t)
    A = -b * k * math.sin(k * x) * e
    B = -1j * w * b * math.cos(k * x) * e
    s = (np.conj(A) * B).imag
    scale = abs(A) * abs(B)
    if scale == 0 or abs(s) <= 1e-12 * scale:
        return 0
    return 1 if s > 0 else -1


def vortex_nodes(params: FloquetParams, n_max: int, x_window: Sequence[float] | None = None) -> list[VortexNode]:
    """All vortex cores with 0 <= n <= n_max and x in [x_window[0], x_window[1]).

    Node times are t_n = n pi/omega and positions
    x = (+-arccos(-V1 cos(n pi)/(2 V0)) + 2 l pi)/k.  ``l`` runs over every
    integer (negative included) that lands in the window; the default window
    is two lattice periods centred on 0.  Outside the phase-jumping region,
    including the boundary where sin(k x) = 0 at the nodes, the list is empty.
    """
    if classify_region(params) is not Region.PHASE_JUMPING:
        return []
    k, w = params.k, params.omega
    if x_window is None:
        x_window = (-2.0 * math.pi / k, 2.0 * math.pi / k)
    lo, hi = float(x_window[0]), float(x_window[1])
    nodes = []
    for n in range(int(n_max) + 1):
        ratio = -params.V1 * math.cos(n * math.pi) / (2.0 * params.V0)
        if not abs(ratio) < 1.0:
            continue
        phi = math.acos(ratio)
        t_n = n * math.pi / w
        for branch in (1, -1):
            l_lo = math.ceil((k * lo - branch * phi) / (2 * math.pi)) - 1
            l_hi = math.floor((k * hi - branch * phi) / (2 * math.pi)) + 1
            for l in range(l_lo, l_hi + 1):
                x = (branch * phi + 2.0 * math.pi * l) / k
                if lo <= x < hi:
                    nodes.append(VortexNode(x, t_n, n, l, branch, node_charge(x, t_n, params)))
    nodes.sort(key=lambda nd: (nd.t, nd.x))
    return nodes


def _rectangle_loop(xc, tc, hx, ht, samples):
    s = np.linspace(-1.0, 1.0, samples, endpoint=False)
    xs = np.concatenate([xc + hx * s, np.full(samples, xc + hx), xc - hx * s, np.full(samples, xc - hx)])
    ts = np.concatenate([np.full(samples, tc - ht), tc + ht * s, np.full(samples, tc + ht), tc - ht * s])
    return xs, ts


def loop_phase(values) -> float:
    """Total phase accumulated along a closed sequence of complex samples."""
    v = np.asarray(values)
    d = np.angle(np.roll(v, -1) / v)
    return float(np.sum(d))


def winding_number(params: FloquetParams, center, loop_radius=None, samples=400, include_energy_phase=True) -> int:
    """Count 2*pi windings of the phase around a rectangle in (x, t).

    ``center`` is a :class:`VortexNode` or an ``(x, t)`` pair.  The loop runs
    counterclockwise with half-widths ``loop_radius = (hx, ht)``, default
    (0.1/k, 0.1/omega), and ``samples`` points per side.

    Raises
    ------
    LoopAmbiguous
        If the loop touches a node or the accumulated phase is more than
        0.1 * 2 pi away from an integer number of turns.
    """
    if isinstance(center, VortexNode):
        xc, tc = center.x, center.t
    else:
        xc, tc = center
    if loop_radius is None:
        loop_radius = (0.1 / params.k, 0.1 / params.omega)
    hx, ht = loop_radius
    xs, ts = _rectangle_loop(xc, tc, hx, ht, int(samples))
    values = psi_exact(xs, ts, params, include_energy_phase=include_energy_phase)
    if np.any(_is_node(np.abs(values) ** 2, params)):
        raise LoopAmbiguous("the loop passes through a zero-density point")
    total = loop_phase(values) / (2 * math.pi)
    turns = round(total)
    if abs(total - turns) > 0.1:
        raise LoopAmbiguous(f"accumulated phase {total:.3f} turns is not near an integer")
    return int(turns)


def field_map(xs, ts, params: FloquetParams) -> dict[str, np.ndarray]:
    """All exact fields on the (t, x) lattice, each of shape (len(ts), len(xs)).

    The phase has the exp(-i EF t) contribution removed and is unwrapped in t.
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    X, T = np.meshgrid(xs, ts)
    psi = psi_exact(X, T, params)
    return {
        "x": X,
        "t": T,
        "re_psi": psi.real,
        "im_psi": psi.imag,
        "density": np.abs(psi) ** 2,
        "phase": phase_map(xs, ts, params, include_energy_phase=False),
        "theta_x": phase_gradient(X, T, params),
        "flow": flow_density(X, T, params),
    }
