"""Linearised dynamics of perturbations around the exact Floquet state.

With psi = (R + eps (phi + i vphi)) exp(i Theta), Theta the full phase of the
exact state, the first-order equations are

    phi_t  =  L1 vphi - S phi
    vphi_t = -(L3 phi + S vphi)

    L_j = -(d^2/dx^2 - Theta_x^2)/2 + j g1d R^2 + V + Theta_t
    S   = (2 Theta_x d/dx + Theta_xx)/2

The coefficients come from the closed-form fields; spatial derivatives are
spectral.  Time stepping is classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import exact
from .errors import NonFiniteField, SingularCoefficient
from .params import FloquetParams, Region, classify_region
from .solver import Grid, WaveField, evolve

DEFAULT_LINSTAB_POINTS = 128
#: RK4 steps per drive period on the default 128-point grid.
DEFAULT_LINSTAB_STEPS_PER_PERIOD = 4000
BLOWUP_THRESHOLD = 1e6
SINGULAR_FLOOR = 1e-6
# RK4 stability interval on the imaginary axis is |lambda dt| <= 2*sqrt(2).
_RK4_IMAG_LIMIT = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class PerturbationField:
    grid: Grid
    t: float
    phi: np.ndarray = field(repr=False)
    vphi: np.ndarray = field(repr=False)

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.phi, self.vphi)

    @property
    def complex(self) -> np.ndarray:
        return self.phi + 1j * self.vphi

    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.phi**2 + self.vphi**2) * self.grid.dx))


def random_smooth_perturbation(grid: Grid, seed: int, cutoff: float = 4.0, amplitude: float = 1.0) -> PerturbationField:
    """Seeded random (phi, vphi), low-pass filtered to |q| <= cutoff * k.

    Each component is scaled so its maximum is ``amplitude``.
    """
    rng = np.random.default_rng(seed)
    keep = np.abs(grid.k_modes) <= cutoff * grid.k
    parts = []
    for _ in range(2):
        c = np.fft.fft(rng.standard_normal(grid.n_points))
        c[~keep] = 0.0
        f = np.fft.ifft(c).real
        parts.append(amplitude * f / np.max(np.abs(f)))
    return PerturbationField(grid, 0.0, parts[0], parts[1])


def gaussian_bump(grid: Grid, center: float, width: float, amplitude: float = 1.0, imag: bool = False) -> PerturbationField:
    """Localised perturbation; periodic images are included."""
    x = grid.x
    d = (x - center + grid.x_max) % grid.length - grid.x_max
    bump = amplitude * np.exp(-((d / width) ** 2))
    zero = np.zeros_like(bump)
    return PerturbationField(grid, 0.0, zero, bump) if imag else PerturbationField(grid, 0.0, bump, zero)


class StabilityOperators:
    """L1, L3 and S around the exact state on a given grid.

    With ``mask_singular`` the coefficients are clamped at points where
    R^2 < floor * max(R^2) and the number of such points is tallied in
    ``clamped_points``; without it those points raise SingularCoefficient.
    """

    def __init__(self, params: FloquetParams, grid: Grid, mask_singular: bool = False, floor: float = SINGULAR_FLOOR):
        self.params = params
        self.grid = grid
        self.mask_singular = mask_singular
        self.floor = floor
        self.clamped_points = 0
        q = grid.k_modes
        self._ik = 1j * q
        self._mk2 = -(q**2)
        self._cache = lru_cache(maxsize=8)(self._background)

    def _background(self, t: float) -> exact.Background:
        return exact.background(self.grid.x, t, self.params, floor=self.floor)

    def background(self, t: float) -> exact.Background:
        bg = self._cache(float(t))
        if bg.clamped.any():
            if not self.mask_singular:
                raise SingularCoefficient(
                    f"{int(bg.clamped.sum())} grid points within the singular neighbourhood of a node at t={t}"
                )
            self.clamped_points += int(bg.clamped.sum())
        return bg

    def derivatives(self, f):
        fh = np.fft.fft(f, axis=-1)
        d1 = np.fft.ifft(self._ik * fh, axis=-1).real
        d2 = np.fft.ifft(self._mk2 * fh, axis=-1).real
        return d1, d2

    def _L(self, j, f, d2, bg):
        g = self.params.g1d
        return -0.5 * (d2 - bg.theta_x**2 * f) + (j * g * bg.R2 + bg.V + bg.theta_t) * f

    def _S(self, f, d1, bg):
        return bg.theta_x * d1 + 0.5 * bg.theta_xx * f

    def rhs(self, phi, vphi, t):
        bg = self.background(t)
        d1p, d2p = self.derivatives(phi)
        d1v, d2v = self.derivatives(vphi)
        dphi = self._L(1, vphi, d2v, bg) - self._S(phi, d1p, bg)
        dvphi = -(self._L(3, phi, d2p, bg) + self._S(vphi, d1v, bg))
        return dphi, dvphi

    def rk4_limit(self) -> float:
        """Largest dt for which the kinetic part alone stays RK4-stable."""
        return _RK4_IMAG_LIMIT / (0.5 * float(np.max(self.grid.k_modes**2)))


def apply_L(j: int, f, ops: StabilityOperators, t: float) -> np.ndarray:
    """L_j f on the grid for j in {1, 3}."""
    if j not in (1, 3):
        raise ValueError("j must be 1 or 3")
    f = np.asarray(f, dtype=float)
    _, d2 = ops.derivatives(f)
    return ops._L(j, f, d2, ops.background(t))


def apply_S(f, ops: StabilityOperators, t: float) -> np.ndarray:
    """S f on the grid."""
    f = np.asarray(f, dtype=float)
    d1, _ = ops.derivatives(f)
    return ops._S(f, d1, ops.background(t))


@dataclass
class StabilityReport:
    times: np.ndarray
    max_amp: np.ndarray
    l2_amp: np.ndarray
    flag: bool
    blowup_time: float | None
    initial_max: float
    clamped_points: int = 0

    @property
    def amplification(self) -> np.ndarray:
        return self.max_amp / self.initial_max

    def rows(self):
        for i in range(len(self.times)):
            hit = self.flag and self.blowup_time is not None and self.times[i] >= self.blowup_time
            yield self.times[i], self.max_amp[i], self.l2_amp[i], int(hit)


def evolve_perturbation(
    p: PerturbationField,
    t_end: float,
    dt: float,
    ops: StabilityOperators,
    threshold: float = BLOWUP_THRESHOLD,
    sample_interval: float | None = None,
):
    """Integrate the linearised system with RK4 and watch for blow-up.

    The flag is raised, and integration stops, when max|psi_1| exceeds
    ``threshold`` times its initial maximum or turns non-finite.  Returns
    ``(final_perturbation, report)``.

    Raises
    ------
    SingularCoefficient
        For phase-jumping parameters when ``ops.mask_singular`` is off.
    ValueError
        If dt is outside the RK4 stability interval of the grid.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < p.t:
        raise ValueError("t_end must not precede p.t")
    if dt > ops.rk4_limit():
        raise ValueError(f"dt={dt:.3g} exceeds the RK4 stability bound {ops.rk4_limit():.3g} for this grid")
    if classify_region(ops.params) is Region.PHASE_JUMPING and not ops.mask_singular:
        raise SingularCoefficient("phase-jumping parameters need mask_singular=True")

    phi = np.array(p.phi, dtype=float)
    vphi = np.array(p.vphi, dtype=float)
    dx = p.grid.dx
    m0 = float(np.max(np.hypot(phi, vphi)))
    ref = m0 if m0 > 0 else 1.0
    times, maxes, l2s = [], [], []

    def sample(t):
        mag = np.hypot(phi, vphi)
        times.append(t)
        maxes.append(float(np.max(mag)))
        l2s.append(float(np.sqrt(np.sum(mag**2) * dx)))

    sample(p.t)
    n_steps = int(math.ceil((t_end - p.t) / dt - 1e-9))
    every = max(1, int(round(sample_interval / dt))) if sample_interval else None
    t = p.t
    flag = False
    blowup_time = None
    for i in range(1, n_steps + 1):
        h = min(dt, t_end - t)
        k1 = ops.rhs(phi, vphi, t)
        k2 = ops.rhs(phi + 0.5 * h * k1[0], vphi + 0.5 * h * k1[1], t + 0.5 * h)
        k3 = ops.rhs(phi + 0.5 * h * k2[0], vphi + 0.5 * h * k2[1], t + 0.5 * h)
        k4 = ops.rhs(phi + h * k3[0], vphi + h * k3[1], t + h)
        phi = phi + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        vphi = vphi + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        t = p.t + i * dt if i < n_steps else t_end
        amp = float(np.max(np.hypot(phi, vphi)))
        if not math.isfinite(amp) or amp > threshold * ref:
            flag = True
            blowup_time = t
            sample(t)
            break
        if (every and i % every == 0) or i == n_steps:
            sample(t)
    report = StabilityReport(
        np.array(times), np.array(maxes), np.array(l2s), flag, blowup_time, m0, ops.clamped_points
    )
    return PerturbationField(p.grid, t, phi, vphi), report


def linearization_consistency(
    eps: float,
    init: PerturbationField,
    params: FloquetParams,
    t_probe: float,
    dt: float | None = None,
) -> float:
    """Relative L2 gap between the finite-eps GP difference and the linear evolution.

    Both GP runs (exact initial state with and without eps*psi_1 in the
    co-rotating frame) use the split-step solver with the same dt, so the
    difference quotient isolates the O(eps) nonlinear remainder.
    """
    if eps == 0:
        raise ValueError("eps must be nonzero")
    grid = init.grid
    if dt is None:
        dt = params.period / DEFAULT_LINSTAB_STEPS_PER_PERIOD
    x = grid.x
    psi0 = exact.psi_exact(x, 0.0, params)
    frame0 = psi0 / np.abs(psi0)
    pert0 = WaveField(grid, 0.0, psi0 + eps * init.complex * frame0)
    base, _ = evolve(WaveField(grid, 0.0, psi0), t_probe, dt, params)
    pert, _ = evolve(pert0, t_probe, dt, params)
    frame = exact.psi_exact(x, t_probe, params)
    frame = np.conj(frame / np.abs(frame))
    fd = (pert.values - base.values) * frame / eps

    ops = StabilityOperators(params, grid)
    lin, _ = evolve_perturbation(init, t_probe, dt, ops, threshold=math.inf)
    diff = np.linalg.norm(fd - lin.complex)
    scale = np.linalg.norm(lin.complex)
    if scale == 0:
        return 0.0 if diff == 0 else math.inf
    if not np.isfinite(diff):
        raise NonFiniteField("non-finite perturbation difference", t=t_probe)
    return float(diff / scale)
