"""Run configuration: one flat table of dotted keys.

Config files are YAML mappings with flat dotted keys (``params.g1d: 1.0``).
JSON is accepted too, and a run manifest (which stores the full resolved
table under ``"config"``) can be fed back in as a config unchanged.

``params.V0_over_g`` and ``params.EF_over_g`` are V0/g1d and EF/g1d in
units of the lattice wave vector k, the way the reference parameter sets are
quoted; V1 is always derived from the balance condition.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigError
from .params import DEFAULT_K, FloquetParams, params_in_units_of_k
from .solver import DEFAULT_N_POINTS, DEFAULT_NOISE, DEFAULT_STEPS_PER_PERIOD, DEFAULT_X_MAX, Grid, RampSchedule

CONFIG_VERSION = 1

DEFAULTS = {
    "config_version": CONFIG_VERSION,
    "params.g1d": 1.0,
    "params.V0_over_g": -0.3,
    "params.EF_over_g": 3.0,
    "params.k": DEFAULT_K,
    "params.alpha": 1,
    "solver.n_points": DEFAULT_N_POINTS,
    "solver.x_max": DEFAULT_X_MAX,
    "solver.steps_per_period": DEFAULT_STEPS_PER_PERIOD,
    "solver.dt": None,
    "solver.periods": 8.0,
    "solver.t_end": None,
    "solver.samples_per_period": 50,
    "noise.epsilon": DEFAULT_NOISE,
    "noise.seed": 0,
    "ramp.direction": "down",
    "ramp.duration_pi_over_omega": 15.0,
    "ramp.hold_pi_over_omega": 5.0,
    "ramp.theta0": 0.0,
    "exact.nx": 128,
    "exact.periods": 2.0,
    "exact.samples_per_period": 100,
    "exact.n_max": 4,
    "sweep.V0_over_g_min": -2.5,
    "sweep.V0_over_g_max": -0.1,
    "sweep.V0_steps": 5,
    "sweep.EF_over_g_min": 0.25,
    "sweep.EF_over_g_max": 3.0,
    "sweep.EF_steps": 5,
    "sweep.n_points": 128,
    "sweep.steps_per_period": 4000,
    "sweep.probe_periods": 4.0,
    "sweep.workers": 1,
    "linstab.n_points": 128,
    "linstab.steps_per_period": 4000,
    "linstab.periods": 8.0,
    "linstab.family": "random",
    "linstab.seed": 0,
    "linstab.cutoff": 4.0,
    "linstab.center": None,
    "linstab.width": 0.3,
    "linstab.threshold": 1e6,
    "linstab.mask_singular": True,
    "output.dir": None,
}


def _coerce(key, value):
    default = DEFAULTS[key]
    if value is None:
        return None
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"expected an integer, got {value}")
            return int(value)
        if isinstance(default, float) or key in ("solver.dt", "solver.t_end", "linstab.center"):
            return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return value


def resolve(overrides: dict | None = None) -> dict:
    """Defaults updated with ``overrides``; unknown keys are an error."""
    cfg = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = _coerce(key, value)
    return cfg


def _flatten(d, prefix=""):
    out = {}
    for key, value in d.items():
        full = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, full + "."))
        else:
            out[full] = value
    return out


def load_config(path) -> dict:
    """Read a YAML/JSON config or manifest into a flat override dict."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = path.read_text()
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (OSError, ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return _flatten(data)


def parse_override(item: str) -> tuple[str, object]:
    """Parse ``key=value`` with YAML scalar semantics for the value."""
    key, sep, raw = item.partition("=")
    if not sep:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"bad override {item!r}: {exc}") from None
    return key.strip(), value


def dump_config(cfg: dict) -> str:
    """YAML text with one flat ``key: value`` line per entry."""
    lines = []
    for key in DEFAULTS:
        value = cfg[key]
        lines.append(f"{key}: {json.dumps(value)}")
    return "\n".join(lines) + "\n"


class ExperimentName(enum.Enum):
    EXACT_FIELDS = "exact"
    PERTURBED_EVOLUTION = "evolve"
    RAMP_DOWN = "ramp-down"
    RAMP_UP = "ramp-up"
    REGION_SWEEP = "sweep"
    LINSTAB = "linstab"


@dataclass(frozen=True)
class SolverConfig:
    n_points: int
    x_max: float
    steps_per_period: int
    dt: float | None
    periods: float
    t_end: float | None
    samples_per_period: int

    def grid(self, k: float) -> Grid:
        return Grid(self.n_points, self.x_max, k)

    def time_step(self, params: FloquetParams) -> float:
        return self.dt if self.dt else params.period / self.steps_per_period

    def end_time(self, params: FloquetParams) -> float:
        return self.t_end if self.t_end is not None else self.periods * params.period


@dataclass(frozen=True)
class NoiseConfig:
    epsilon: float
    seed: int


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to run one experiment, built from a resolved table."""

    name: ExperimentName
    config: tuple  # sorted (key, value) pairs; hashable and order-stable

    @classmethod
    def from_config(cls, name, cfg: dict) -> "ExperimentSpec":
        cfg = resolve({k: v for k, v in cfg.items() if k in DEFAULTS})
        return cls(ExperimentName(name), tuple(sorted(cfg.items())))

    @property
    def table(self) -> dict:
        return dict(self.config)

    def to_config(self) -> dict:
        return {"experiment": self.name.value, **self.table}

    @property
    def params(self) -> FloquetParams:
        c = self.table
        return params_in_units_of_k(
            c["params.V0_over_g"], c["params.EF_over_g"], g1d=c["params.g1d"], k=c["params.k"], alpha=c["params.alpha"]
        )

    @property
    def solver(self) -> SolverConfig:
        c = self.table
        return SolverConfig(
            c["solver.n_points"],
            c["solver.x_max"],
            c["solver.steps_per_period"],
            c["solver.dt"],
            c["solver.periods"],
            c["solver.t_end"],
            c["solver.samples_per_period"],
        )

    @property
    def noise(self) -> NoiseConfig:
        c = self.table
        return NoiseConfig(c["noise.epsilon"], c["noise.seed"])

    @property
    def schedule(self) -> RampSchedule | None:
        """Ramp for the ramp experiments, None (constant V0) otherwise."""
        c = self.table
        p = self.params
        t_ramp = c["ramp.duration_pi_over_omega"] * math.pi / p.omega
        if self.name is ExperimentName.RAMP_DOWN:
            return RampSchedule.linear(p.V0, 0.0, t_ramp)
        if self.name is ExperimentName.RAMP_UP:
            return RampSchedule.linear(0.0, p.V0, t_ramp)
        return None

    @property
    def output_dir(self) -> str | None:
        return self.table["output.dir"]
