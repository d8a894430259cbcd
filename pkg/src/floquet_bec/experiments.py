"""Experiment runners: exact field maps, noisy evolution, ramps, sweeps, linear stability.

Each runner takes an :class:`ExperimentSpec`, writes its CSV outputs into
``out_dir`` (when given) and returns a result object holding the in-memory
data plus the list of files written.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exact, fileio
from .config import ExperimentName, ExperimentSpec, resolve
from .diagnostics import DiagnosticsTrace, density_uniformity, fidelity
from .errors import FloquetError, InfeasibleParameters, NonFiniteField
from .linstab import (
    StabilityOperators,
    StabilityReport,
    evolve_perturbation,
    gaussian_bump,
    random_smooth_perturbation,
)
from .params import FloquetParams, Region, classify_region, params_in_units_of_k
from .solver import Grid, WaveField, add_white_noise, evolve


@dataclass
class RunResult:
    files: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)


@dataclass
class EvolutionResult(RunResult):
    trace: DiagnosticsTrace | None = None
    snapshots: list[WaveField] = field(default_factory=list)
    final: WaveField | None = None


def _meta(spec: ExperimentSpec, **extra) -> dict:
    p = spec.params
    meta = {"experiment": spec.name.value, "region": classify_region(p).value}
    meta.update({f"param.{k}": v for k, v in p.as_dict().items()})
    meta.update({"noise.epsilon": spec.noise.epsilon, "noise.seed": spec.noise.seed})
    meta.update(extra)
    return meta


def _exact_reference(grid: Grid, params: FloquetParams):
    x = grid.x
    return lambda t: exact.psi_exact(x, t, params)


def run_exact_fields(spec: ExperimentSpec, out_dir=None) -> RunResult:
    """Density, phase (EF*t removed) and velocity maps over two drive periods.

    The node sidecar lists the analytic vortex cores inside the map window.
    """
    p = spec.params
    c = spec.table
    grid = spec.solver.grid(p.k)
    xs = grid.x[:: max(1, grid.n_points // c["exact.nx"])]
    n_t = int(round(c["exact.periods"] * c["exact.samples_per_period"])) + 1
    ts = np.linspace(0.0, c["exact.periods"] * p.period, n_t)
    fields = exact.field_map(xs, ts, p)
    n_max = int(math.floor(ts[-1] * p.omega / math.pi + 1e-9))
    nodes = exact.vortex_nodes(p, n_max, (-grid.x_max, grid.x_max))
    dens = fields["density"]
    result = RunResult(
        summary={
            "region": classify_region(p).value,
            "min_density": float(dens.min()),
            "max_density": float(dens.max()),
            "n_nodes": len(nodes),
            "divergent_points": int(np.isinf(fields["theta_x"]).sum()),
        }
    )
    result.data["fields"] = fields
    result.data["nodes"] = nodes
    if out_dir is not None:
        out = Path(out_dir)
        meta = _meta(spec, phase_convention="exp(-i EF t) removed")
        result.files.append(fileio.write_field_map_csv(out / "field_map.csv", fields, meta))
        rows = [(nd.x, nd.t, nd.n, nd.l, nd.branch, nd.charge) for nd in nodes]
        result.files.append(fileio.write_csv(out / "nodes.csv", ("x", "t", "n", "l", "branch", "charge"), rows, meta))
    return result


def run_perturbed_evolution(spec: ExperimentSpec, out_dir=None, keep_snapshots=True) -> EvolutionResult:
    """Exact initial state plus white noise, evolved and compared with the exact state.

    Fidelity is sampled ``solver.samples_per_period`` times per drive period.
    A non-finite field ends the run early; the truncated trace is kept and
    flagged rather than raised.
    """
    p = spec.params
    s = spec.solver
    grid = s.grid(p.k)
    psi0 = WaveField(grid, 0.0, exact.psi_exact(grid.x, 0.0, p))
    start = add_white_noise(psi0, spec.noise.epsilon, spec.noise.seed)
    snaps = []
    observers = [snaps.append] if keep_snapshots else []
    result = EvolutionResult()
    try:
        final, trace = evolve(
            start,
            s.end_time(p),
            s.time_step(p),
            p,
            sample_interval=p.period / s.samples_per_period,
            reference=_exact_reference(grid, p),
            observers=observers,
        )
    except NonFiniteField as exc:
        final, trace = None, exc.trace
    result.trace, result.final, result.snapshots = trace, final, snaps
    F = trace.fidelity
    result.summary = {
        "region": classify_region(p).value,
        "min_fidelity": float(np.nanmin(F)),
        "final_fidelity": float(F[-1]),
        "norm_drift": trace.norm_drift() if final is not None else math.nan,
        "blowup_time": trace.blowup_time,
    }
    if out_dir is not None:
        out = Path(out_dir)
        meta = _meta(spec, dt=s.time_step(p), n_points=grid.n_points, x_max=grid.x_max)
        result.files.append(fileio.write_trace_csv(out / "trace.csv", trace, meta))
        if snaps:
            stride = max(1, grid.n_points // 128)
            rows = ((f.t, x, d) for f in snaps for x, d in zip(grid.x[::stride], f.density[::stride]))
            result.files.append(fileio.write_csv(out / "density_map.csv", ("t", "x", "density"), rows, meta))
        if final is not None:
            result.files.append(fileio.write_snapshot_binary(out / "final_field.bin", final))
    return result


def run_ramp(spec: ExperimentSpec, direction: str | None = None, out_dir=None) -> EvolutionResult:
    """Slow linear ramp of the potential amplitude followed by a hold.

    ``down``: start from the exact Floquet state, ramp A from V0 to 0, and
    compare with the uniform state.  ``up``: start from the uniform state of
    density (EF - V0/2)/g1d and phase theta0, ramp A from 0 to V0, and
    compare with the exact Floquet state.
    """
    c = spec.table
    direction = (direction or c["ramp.direction"]).lower()
    if direction not in ("up", "down"):
        raise ValueError(f"ramp direction must be 'up' or 'down', got {direction!r}")
    name = ExperimentName.RAMP_UP if direction == "up" else ExperimentName.RAMP_DOWN
    if spec.name is not name:
        spec = ExperimentSpec.from_config(name.value, spec.table)
    p = spec.params
    s = spec.solver
    grid = s.grid(p.k)
    schedule = spec.schedule
    hold = c["ramp.hold_pi_over_omega"] * math.pi / p.omega
    t_end = schedule.t_ramp + hold
    uniform_amp = math.sqrt(p.mu / p.g1d)
    if direction == "down":
        psi0 = exact.psi_exact(grid.x, 0.0, p)
        ones = np.ones(grid.n_points, dtype=complex)
        reference = lambda t: uniform_amp * ones  # noqa: E731
    else:
        psi0 = np.full(grid.n_points, uniform_amp * np.exp(1j * c["ramp.theta0"]), dtype=complex)
        reference = _exact_reference(grid, p)
    start = add_white_noise(WaveField(grid, 0.0, psi0), spec.noise.epsilon, spec.noise.seed)
    result = EvolutionResult()
    try:
        final, trace = evolve(
            start,
            t_end,
            s.time_step(p),
            p,
            schedule,
            sample_interval=p.period / s.samples_per_period,
            reference=reference,
        )
    except NonFiniteField as exc:
        final, trace = None, exc.trace
    result.trace, result.final = trace, final
    if final is not None:
        target = WaveField(grid, final.t, reference(final.t))
        mean, spread = density_uniformity(final)
        result.summary = {
            "direction": direction,
            "final_fidelity": fidelity(final, target),
            "mean_density": mean,
            "mean_density_over_k": mean / p.k,
            "spread": spread,
            "t_ramp": schedule.t_ramp,
            "t_end": t_end,
        }
    else:
        result.summary = {"direction": direction, "blowup_time": trace.blowup_time}
    if out_dir is not None:
        out = Path(out_dir)
        meta = _meta(spec, direction=direction, t_ramp=schedule.t_ramp, hold=hold, dt=s.time_step(p))
        result.files.append(fileio.write_trace_csv(out / f"ramp_{direction}_trace.csv", trace, meta))
        if final is not None:
            result.files.append(fileio.write_snapshot_csv(out / f"ramp_{direction}_final.csv", final, meta))
    return result


SWEEP_COLUMNS = ("V0_over_g", "EF_over_g", "V1_over_g", "region", "probe_time", "fidelity", "status")


def _sweep_cell(args):
    cfg, v0, ef = args
    g, k = cfg["params.g1d"], cfg["params.k"]
    try:
        p = params_in_units_of_k(v0, ef, g1d=g, k=k, alpha=cfg["params.alpha"])
    except InfeasibleParameters as exc:
        return (v0, ef, math.nan, Region.INFEASIBLE.value, math.nan, math.nan, f"skipped: {exc.which}")
    region = classify_region(p)
    v1 = p.V1 / (g * k)
    if region is Region.INFEASIBLE:
        return (v0, ef, v1, region.value, math.nan, math.nan, "skipped")
    grid = Grid(cfg["sweep.n_points"], cfg["solver.x_max"], k)
    probe = cfg["sweep.probe_periods"] * p.period
    start = add_white_noise(
        WaveField(grid, 0.0, exact.psi_exact(grid.x, 0.0, p)), cfg["noise.epsilon"], cfg["noise.seed"]
    )
    try:
        final, _ = evolve(start, probe, p.period / cfg["sweep.steps_per_period"], p)
    except FloquetError as exc:
        return (v0, ef, v1, region.value, probe, math.nan, f"failed: {exc.category}")
    F = fidelity(final, WaveField(grid, final.t, exact.psi_exact(grid.x, final.t, p)))
    return (v0, ef, v1, region.value, probe, F, "ok")


def run_region_sweep(spec: ExperimentSpec, out_dir=None) -> RunResult:
    """Classify every (V0, EF) cell of a rectangular grid and probe its fidelity.

    Each feasible cell starts from the noisy exact state and is evolved for
    ``sweep.probe_periods`` drive periods; infeasible cells are marked and
    skipped.  Cells are independent, so ``sweep.workers > 1`` farms them out
    to worker processes; row order is fixed regardless.
    """
    c = spec.table
    v0s = np.linspace(c["sweep.V0_over_g_min"], c["sweep.V0_over_g_max"], c["sweep.V0_steps"])
    efs = np.linspace(c["sweep.EF_over_g_min"], c["sweep.EF_over_g_max"], c["sweep.EF_steps"])
    jobs = [(c, float(v0), float(ef)) for v0 in v0s for ef in efs]
    workers = c["sweep.workers"]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(j) for j in jobs]
    result = RunResult(summary={r.value: sum(1 for row in rows if row[3] == r.value) for r in Region})
    result.data["rows"] = rows
    if out_dir is not None:
        result.files.append(fileio.write_csv(Path(out_dir) / "sweep.csv", SWEEP_COLUMNS, rows, _meta(spec)))
    return result


def initial_perturbation(spec: ExperimentSpec, grid: Grid, params: FloquetParams):
    c = spec.table
    if c["linstab.family"] == "random":
        return random_smooth_perturbation(grid, c["linstab.seed"], cutoff=c["linstab.cutoff"])
    if c["linstab.family"] == "bump":
        center = c["linstab.center"]
        if center is None:
            nodes = exact.vortex_nodes(params, 0, (-grid.x_max, grid.x_max))
            center = next((nd.x for nd in nodes if nd.x > 0), 0.0)
        return gaussian_bump(grid, center, c["linstab.width"])
    raise ValueError(f"unknown perturbation family {c['linstab.family']!r}")


def run_linstab(spec: ExperimentSpec, out_dir=None) -> RunResult:
    """Evolve the linearised perturbation equations and report blow-up."""
    c = spec.table
    p = spec.params
    grid = Grid(c["linstab.n_points"], c["solver.x_max"], p.k)
    ops = StabilityOperators(p, grid, mask_singular=c["linstab.mask_singular"])
    init = initial_perturbation(spec, grid, p)
    dt = p.period / c["linstab.steps_per_period"]
    _, report = evolve_perturbation(
        init, c["linstab.periods"] * p.period, dt, ops, threshold=c["linstab.threshold"], sample_interval=p.period / 50
    )
    result = RunResult(
        summary={
            "region": classify_region(p).value,
            "family": c["linstab.family"],
            "blowup": report.flag,
            "blowup_time": report.blowup_time,
            "max_amplification": float(np.max(report.amplification)),
            "clamped_points": report.clamped_points,
        }
    )
    result.data["report"] = report
    if out_dir is not None:
        meta = _meta(spec, family=c["linstab.family"], dt=dt, n_points=grid.n_points)
        if report.blowup_time is not None:
            meta["blowup_time"] = report.blowup_time
        result.files.append(
            fileio.write_csv(Path(out_dir) / "perturbation_trace.csv", ("t", "max_psi1", "l2_psi1", "flag"), report.rows(), meta)
        )
    return result


def default_spec(name: str, **overrides) -> ExperimentSpec:
    return ExperimentSpec.from_config(name, resolve(overrides))


__all__ = [
    "RunResult",
    "EvolutionResult",
    "StabilityReport",
    "default_spec",
    "run_exact_fields",
    "run_perturbed_evolution",
    "run_ramp",
    "run_region_sweep",
    "run_linstab",
]
