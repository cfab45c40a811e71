"""Command-line entry point: ``uavswarm {run,cvt,metrics,plot}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod
from .cvt import ConfigError, LloydParams, Region, run_lloyd
from .engine import DivergenceError, TrajectoryLog, compute_metrics, run_scenario
from .plot import projection_view, separation_view, top_view
from .world import obstacle_center_at

log = logging.getLogger("uavswarm")

EXIT_OK = 0
EXIT_MISSING = 3
EXIT_SCHEMA = 4
EXIT_DIVERGENCE = 5
EXIT_PARSE = 6

DEFAULT_REGION = "-5,5,-2.3,2.3"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_scenario(path) -> cfgmod.SimConfig:
    if not Path(path).is_file():
        raise CliError(EXIT_MISSING, f"scenario file not found: {path}")
    try:
        return cfgmod.load(path)
    except ConfigError as exc:
        raise CliError(EXIT_SCHEMA, str(exc)) from exc


def _manifest_config(csv_path: Path, scenario: str | None) -> cfgmod.SimConfig | None:
    if scenario:
        return _load_scenario(scenario)
    manifest = csv_path.parent / "manifest.json"
    if manifest.is_file():
        data = json.loads(manifest.read_text(encoding="utf-8"))
        return cfgmod.SimConfig.model_validate(data["scenario"])
    return None


def _read_log(path: Path) -> TrajectoryLog:
    if not path.is_file():
        raise CliError(EXIT_MISSING, f"trajectory file not found: {path}")
    try:
        return TrajectoryLog.from_csv(path)
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"malformed trajectory CSV {path}: {exc}") from exc


def cmd_run(args) -> int:
    config = _load_scenario(args.scenario)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.mode is not None:
        changes["mode"] = args.mode
    if changes:
        try:
            config = config.with_overrides(**changes)
        except Exception as exc:
            raise CliError(EXIT_SCHEMA, f"invalid override: {exc}") from exc
    try:
        trajectory = run_scenario(config)
    except DivergenceError as exc:
        raise CliError(EXIT_DIVERGENCE, str(exc)) from exc
    except ConfigError as exc:
        raise CliError(EXIT_SCHEMA, str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trajectory.to_csv(out / "trajectory.csv")
    with open(out / "obstacles.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "obstacle_id", "x", "y", "z"])
        for k, t in enumerate(trajectory.t):
            for j, c in enumerate(trajectory.obstacle_centers[k]):
                w.writerow([repr(float(t)), j, *(repr(float(v)) for v in c)])
    metrics = compute_metrics(trajectory, config)
    (out / "metrics.json").write_text(metrics.to_json() + "\n", encoding="utf-8")
    manifest = {
        "version": __version__,
        "scenario_file": str(args.scenario),
        "scenario": config.model_dump(mode="json"),
        "effective_seeds": {"scenario": config.seed, "init": config.init_seed, "lloyd": config.lloyd_seed},
        "steps": len(trajectory.t),
        "lloyd_iterations": trajectory.lloyd_iterations,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out / 'trajectory.csv'} ({len(trajectory.t)} steps x {config.n_agents} agents)")
    return EXIT_OK


def _parse_region(text: str) -> Region:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise CliError(EXIT_SCHEMA, f"region must be comma-separated numbers: {text!r}") from exc
    if len(vals) not in (4, 6):
        raise CliError(EXIT_SCHEMA, "region needs x0,x1,y0,y1 or x0,x1,y0,y1,z0,z1")
    lo, hi = tuple(vals[0::2]), tuple(vals[1::2])
    try:
        return Region(lo, hi)
    except ConfigError as exc:
        raise CliError(EXIT_SCHEMA, str(exc)) from exc


def cmd_cvt(args) -> int:
    region = _parse_region(args.region)
    try:
        params = LloydParams(n=args.n, s_num=args.s_num, a1=args.a1, a2=1 - args.a1, b1=args.b1,
                             b2=1 - args.b1, max_iter=args.max_iter, move_tol=args.move_tol,
                             rng_seed=args.seed if args.seed is not None else 0)
    except ConfigError as exc:
        raise CliError(EXIT_SCHEMA, str(exc)) from exc
    result = run_lloyd(region, params)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "x", "y", "z"])
        for i, s in enumerate(result.seeds):
            z = s[2] if region.dim == 3 else args.altitude
            w.writerow([i, repr(float(s[0])), repr(float(s[1])), repr(float(z))])
    energy_path = Path(args.energy_out) if args.energy_out else out.with_name(out.stem + "_energy.csv")
    with open(energy_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "energy", "max_displacement"])
        for k, (e, d) in enumerate(zip(result.energy, result.displacement), start=1):
            w.writerow([k, repr(e), repr(d)])
    print(f"wrote {len(result.seeds)} seeds to {out} after {result.iterations} iterations ({result.stop_reason})")
    return EXIT_OK


def cmd_metrics(args) -> int:
    path = Path(args.trajectory)
    trajectory = _read_log(path)
    config = _manifest_config(path, args.scenario)
    if config is None:
        raise CliError(EXIT_MISSING, "no scenario given and no manifest.json next to the trajectory")
    text = compute_metrics(trajectory, config).to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    path = Path(args.trajectory)
    trajectory = _read_log(path)
    config = _manifest_config(path, args.scenario)
    obstacles, buildings, r_s = [], [], 1.0
    if config is not None:
        r_s = config.detection.r_s
        buildings = [(np.array(b.min), np.array(b.max)) for b in config.buildings]
        times = trajectory.t if len(trajectory.t) else np.zeros(1)
        obstacles = [(np.array([obstacle_center_at(o, t) for t in times]), o.radius)
                     for o in config.obstacle_objs()]
    if args.view == "top":
        svg = top_view(trajectory, obstacles, buildings)
    elif args.view == "3d-projection":
        svg = projection_view(trajectory, obstacles)
    else:
        if trajectory.p.size and not 0 <= args.agent < trajectory.n_agents:
            raise CliError(EXIT_SCHEMA, f"agent {args.agent} not in log")
        svg = separation_view(trajectory, args.agent, r_s)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg, encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavswarm", description=__doc__)
    parser.add_argument("--schema-dump", action="store_true", help="print the scenario JSON schema and exit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("run", help="simulate a scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--mode", choices=["planar", "3d"], help="override the maneuver mode")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cvt", help="run the Lloyd iteration on a rectangle or box")
    p.add_argument("--region", default=DEFAULT_REGION, help="x0,x1,y0,y1[,z0,z1] (default %(default)s)")
    p.add_argument("--n", type=int, required=True, help="number of seeds")
    p.add_argument("--s-num", type=int, help="samples per iteration (default 100 N)")
    p.add_argument("--a1", type=float, default=0.5)
    p.add_argument("--b1", type=float, default=0.5)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--move-tol", type=float, default=1e-3)
    p.add_argument("--altitude", type=float, default=0.0, help="z written for 2D regions")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="seed CSV path")
    p.add_argument("--energy-out", help="energy trace CSV (default <out>_energy.csv)")
    p.set_defaults(func=cmd_cvt)

    p = sub.add_parser("metrics", help="recompute metrics from a trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("--scenario", help="scenario file (default: manifest.json beside the CSV)")
    p.add_argument("--out", help="also write the JSON here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("plot", help="render a trajectory CSV to SVG")
    p.add_argument("trajectory")
    p.add_argument("--out", required=True, help="SVG path")
    p.add_argument("--view", choices=["top", "3d-projection", "separation"], default="top")
    p.add_argument("--agent", type=int, default=0, help="reference agent for the separation view")
    p.add_argument("--scenario", help="scenario file (default: manifest.json beside the CSV)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SWARM_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema_dump:
        print(json.dumps(cfgmod.schema(), indent=2))
        return EXIT_OK
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
