"""Command-line entry point.

    floquet-bec classify|exact|evolve|ramp|sweep|linstab [-c CONFIG] [--set key=value ...] [--out DIR]

Outputs go to ``--out``, else ``output.dir`` from the config, else
``$FLOQUET_BEC_OUTPUT/<subcommand>``, else ``./floquet_output/<subcommand>``.
Each run writes ``manifest.json`` next to its outputs.  Failures print one
JSON line ``{"error": <category>, "message": ...}`` on stderr and exit
nonzero.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .config import ExperimentSpec, load_config, parse_override, resolve
from .errors import ConfigError, FloquetError
from .experiments import run_exact_fields, run_linstab, run_perturbed_evolution, run_ramp, run_region_sweep
from .params import classify_region

OUTPUT_ENV = "FLOQUET_BEC_OUTPUT"

EXIT_CODES = {
    "config-parse": 2,
    "infeasible-parameters": 3,
    "filesystem": 4,
    "non-finite-field": 5,
    "singular-coefficient": 5,
}

_EXPERIMENTS = {
    "exact": ("exact", run_exact_fields),
    "evolve": ("evolve", run_perturbed_evolution),
    "sweep": ("sweep", run_region_sweep),
    "linstab": ("linstab", run_linstab),
}


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):
        return _jsonable(value.item())
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floquet-bec", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("classify", "print the balance-region class of the parameters"),
        ("exact", "write exact density/phase/velocity maps and node positions"),
        ("evolve", "evolve the noisy exact state and track fidelity"),
        ("ramp", "slow ramp of the potential amplitude (up or down)"),
        ("sweep", "classify and probe a grid of (V0, EF) cells"),
        ("linstab", "evolve the linearised perturbation equations"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", help="YAML/JSON config or a previous manifest.json")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out", help="output directory")
        if name == "ramp":
            p.add_argument("--direction", choices=("up", "down"), help="overrides ramp.direction")
    return parser


def _resolve_config(args) -> dict:
    overrides = load_config(args.config) if args.config else {}
    overrides.pop("experiment", None)
    for item in args.overrides:
        key, value = parse_override(item)
        overrides[key] = value
    if getattr(args, "direction", None):
        overrides["ramp.direction"] = args.direction
    return resolve(overrides)


def _output_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    if cfg["output.dir"]:
        return Path(cfg["output.dir"])
    root = os.environ.get(OUTPUT_ENV)
    return Path(root or "floquet_output") / args.command


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, args, cfg, result, wall) -> Path:
    files = [Path(f) for f in result.files]
    manifest = {
        "experiment": args.command,
        "code_version": __version__,
        "seed": cfg["noise.seed"],
        "wall_time_s": wall,
        "config": cfg,
        "summary": result.summary,
        "outputs": [{"path": f.name, "sha256": _sha256(f)} for f in files],
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return path


def run(args) -> int:
    cfg = _resolve_config(args)
    if args.command == "classify":
        spec = ExperimentSpec.from_config("exact", cfg)
        try:
            region = classify_region(spec.params)
        except FloquetError:
            from .params import Region

            region = Region.INFEASIBLE
        print(region.value)
        return 0
    out = _output_dir(args, cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _FilesystemError(str(exc)) from None
    t0 = time.perf_counter()
    try:
        if args.command == "ramp":
            spec = ExperimentSpec.from_config(f"ramp-{cfg['ramp.direction']}", cfg)
            result = run_ramp(spec, out_dir=out)
        else:
            name, runner = _EXPERIMENTS[args.command]
            result = runner(ExperimentSpec.from_config(name, cfg), out_dir=out)
        _write_manifest(out, args, cfg, result, time.perf_counter() - t0)
    except OSError as exc:
        raise _FilesystemError(str(exc)) from None
    print(json.dumps(_jsonable(result.summary), sort_keys=True))
    return 0


class _FilesystemError(FloquetError):
    category = "filesystem"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except FloquetError as exc:
        category, message = exc.category, str(exc)
    except ValueError as exc:
        # bad enum values and similar config-level mistakes
        category, message = ConfigError.category, str(exc)
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return EXIT_CODES.get(category, 1)


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
