import json

import numpy as np
import pytest

from floquet_bec import ConfigError, Grid, WaveField
from floquet_bec.config import DEFAULTS, ExperimentName, ExperimentSpec, dump_config, load_config, parse_override, resolve
from floquet_bec.diagnostics import TRACE_COLUMNS, TraceRecorder
from floquet_bec.exact import psi_exact
from floquet_bec.fileio import (
    read_csv,
    read_snapshot_binary,
    write_csv,
    write_snapshot_binary,
    write_snapshot_csv,
    write_trace_csv,
)


def test_csv_header_and_roundtrip(tmp_path):
    path = write_csv(tmp_path / "a.csv", ("x", "y"), [(0.1, 2), (1 / 3, -4)], {"g1d": 1.0, "note": "hi"})
    meta, cols, rows = read_csv(path)
    assert cols == ["x", "y"]
    assert meta["g1d"] == "1.0" and meta["note"] == "hi" and "units" in meta
    assert float(rows[1][0]) == 1 / 3


def test_trace_csv_schema(tmp_path, left):
    grid = Grid(32, 4.0)
    rec = TraceRecorder(lambda t: psi_exact(grid.x, t, left))
    rec.record(WaveField(grid, 0.0, psi_exact(grid.x, 0.0, left)))
    _, cols, rows = read_csv(write_trace_csv(tmp_path / "t.csv", rec.trace()))
    assert tuple(cols) == TRACE_COLUMNS
    assert len(rows) == 1


def test_snapshot_binary_roundtrip(tmp_path, right):
    grid = Grid(64, 4.0)
    f = WaveField(grid, 1.25, psi_exact(grid.x, 1.25, right))
    path = write_snapshot_binary(tmp_path / "s.bin", f)
    assert path.stat().st_size == 8 * 3 + 16 * 64
    g = read_snapshot_binary(path, grid.k)
    assert g.grid == grid and g.t == 1.25
    assert np.array_equal(g.values, f.values)
    _, cols, rows = read_csv(write_snapshot_csv(tmp_path / "s.csv", f))
    assert cols == ["x", "re_psi", "im_psi"] and len(rows) == 64


def test_resolve_defaults_and_unknown_keys():
    cfg = resolve({"solver.n_points": "256", "noise.seed": 3.0})
    assert cfg["solver.n_points"] == 256 and cfg["noise.seed"] == 3
    with pytest.raises(ConfigError):
        resolve({"solver.nope": 1})
    with pytest.raises(ConfigError):
        resolve({"noise.seed": 1.5})


def test_yaml_config_nested_and_flat(tmp_path):
    (tmp_path / "a.yaml").write_text("params:\n  V0_over_g: -2\nnoise.epsilon: 0\n")
    assert load_config(tmp_path / "a.yaml") == {"params.V0_over_g": -2, "noise.epsilon": 0}
    (tmp_path / "bad.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_dump_config_roundtrip(tmp_path):
    cfg = resolve({"params.EF_over_g": 0.5, "linstab.center": 0.25})
    (tmp_path / "c.yaml").write_text(dump_config(cfg))
    assert resolve(load_config(tmp_path / "c.yaml")) == cfg


def test_manifest_shape_is_reingestible(tmp_path):
    cfg = resolve({"noise.seed": 9})
    (tmp_path / "m.json").write_text(json.dumps({"experiment": "evolve", "config": cfg, "outputs": []}))
    assert resolve(load_config(tmp_path / "m.json")) == cfg


def test_parse_override():
    assert parse_override("noise.seed=4") == ("noise.seed", 4)
    assert parse_override("output.dir=runs/a") == ("output.dir", "runs/a")
    with pytest.raises(ConfigError):
        parse_override("noise.seed")


def test_spec_roundtrip_and_derived_objects():
    spec = ExperimentSpec.from_config("ramp-up", resolve({"params.V0_over_g": -0.3}))
    assert spec.name is ExperimentName.RAMP_UP
    again = ExperimentSpec.from_config(spec.to_config().pop("experiment"), spec.table)
    assert again == spec
    p = spec.params
    assert spec.schedule.A_start == 0.0 and spec.schedule.A_end == p.V0
    assert spec.solver.time_step(p) == pytest.approx(p.period / DEFAULTS["solver.steps_per_period"])
    assert ExperimentSpec.from_config("evolve", resolve()).schedule is None
