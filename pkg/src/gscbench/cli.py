"""Command-line front door: run, compare, sweep, render, serve.

Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.  The
default output directory is ./gscbench-out, overridable with GSC_BENCH_OUT.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import pathlib
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .control import CONTROLLER_KINDS
from .errors import CodedError
from .render import render_svg
from .scenarios import build_scenario, load_scenario, scenario_ids
from .simulate import controller_config, run_scenario
from .world import Trace

METRICS_SCHEMA = "metrics-v1"
COMPARE_COLUMNS = (
    "controller", "seeds", "collision_rate", "goal_rate", "mean_path_length",
    "mean_agreement_rms", "mean_max_accel",
)
SWEEP_COLUMNS = (
    "parameter", "value", "seeds", "collision_rate", "goal_rate",
    "mean_path_length", "mean_agreement_rms",
)
SWEEP_PARAMS = ("drop", "lag", "noise")


@dataclass
class RunReport:
    scenario: str
    controller: str
    seed: int
    metrics: object
    trace_path: str
    wall_time: float


def default_out() -> pathlib.Path:
    return pathlib.Path(os.environ.get("GSC_BENCH_OUT", "gscbench-out"))


def resolve_scenario(name: str):
    """A catalog id, or a path to a scenario JSON file."""
    if name in scenario_ids():
        return build_scenario(name)
    p = pathlib.Path(name)
    if p.exists():
        return load_scenario(p)
    raise CodedError(
        "unknown-scenario", f"{name!r}; catalog: {', '.join(scenario_ids())}"
    )


def parse_seeds(text: str):
    """Seed list syntax: '7', '0,3,9', or '0..49' (inclusive)."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = list(range(int(lo), int(hi) + 1))
    elif "," in text:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    else:
        seeds = [int(text)] if text else []
    if not seeds:
        raise CodedError("bad-seeds", "empty seed range")
    return seeds


def _apply_channel_param(spec, param: str, value: float):
    ch = spec.channel
    if param == "drop":
        ch = replace(ch, drop_probability=float(value))
    elif param == "lag":
        ch = replace(ch, lag_steps=int(value))
    elif param == "noise":
        ch = replace(ch, noise_std=float(value))
    else:
        raise CodedError("bad-parameter", f"{param!r}; valid: {SWEEP_PARAMS}")
    return replace(spec, channel=ch)


def _single_run(spec, controller: str, seed: int):
    trace, metrics = run_scenario(spec, controller_config(spec, controller), seed=seed)
    return trace, metrics


def _metrics_doc(spec, controller, seed, metrics) -> dict:
    doc = {"schema": METRICS_SCHEMA, "scenario": spec.sid,
           "controller": controller, "seed": seed}
    doc.update(metrics.to_json())
    return doc


def cmd_run(scenario: str, controller: str, seed: int, out_dir) -> RunReport:
    spec = resolve_scenario(scenario)
    if controller not in CONTROLLER_KINDS:
        raise CodedError("unknown-controller",
                         f"{controller!r}; valid: {', '.join(CONTROLLER_KINDS)}")
    t0 = time.perf_counter()
    trace, metrics = _single_run(spec, controller, seed)
    out = pathlib.Path(out_dir) / f"{spec.sid}-{controller}-s{seed}"
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.jsonl"
    trace_path.write_text(trace.to_jsonl())
    (out / "metrics.json").write_text(
        json.dumps(_metrics_doc(spec, controller, seed, metrics),
                   indent=2, sort_keys=True) + "\n")
    (out / "rollout.svg").write_text(render_svg(trace, spec))
    return RunReport(spec.sid, controller, seed, metrics, str(trace_path),
                     time.perf_counter() - t0)


def _aggregate(rows):
    """Per-controller aggregates over per-seed metrics."""
    n = len(rows)
    region_names = sorted({k for m in rows for k in m.region_hits})
    agg = {
        "collision_rate": sum(m.collision for m in rows) / n,
        "goal_rate": sum(m.steps_to_goal is not None for m in rows) / n,
        "mean_path_length": sum(m.path_length for m in rows) / n,
        "mean_agreement_rms": sum(m.agreement_rms for m in rows) / n,
        "mean_max_accel": sum(m.max_accel for m in rows) / n,
    }
    for name in region_names:
        agg[f"hit_rate_{name}"] = sum(m.region_hits.get(name, False) for m in rows) / n
    return agg


def _run_grid(spec, jobs, tasks):
    """Execute (key, controller, seed, spec) tasks, possibly in parallel;
    results are keyed so output is independent of completion order."""
    results = {}
    if jobs <= 1:
        for key, controller, seed, sp in tasks:
            results[key] = _single_run(sp, controller, seed)[1]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futs = {
                pool.submit(_single_run, sp, controller, seed): key
                for key, controller, seed, sp in tasks
            }
            for fut, key in futs.items():
                results[key] = fut.result()[1]
    return results


def cmd_compare(scenario: str, controllers, seeds, out_dir, jobs: int = 1) -> str:
    spec = resolve_scenario(scenario)
    if not controllers:
        raise CodedError("bad-controllers", "at least one controller required")
    for c in controllers:
        if c not in CONTROLLER_KINDS:
            raise CodedError("unknown-controller", f"{c!r}")
    if not seeds:
        raise CodedError("bad-seeds", "empty seed range")
    tasks = [((c, s), c, s, spec) for c in controllers for s in seeds]
    results = _run_grid(spec, jobs, tasks)
    region_names = sorted({
        k for m in results.values() for k in m.region_hits
    })
    columns = list(COMPARE_COLUMNS) + [f"hit_rate_{n}" for n in region_names]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for c in controllers:
        agg = _aggregate([results[(c, s)] for s in seeds])
        row = [c, len(seeds)] + [repr(agg[col]) for col in columns[2:]]
        w.writerow(row)
    text = buf.getvalue()
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"compare-{spec.sid}.csv").write_text(text)
    return text


def cmd_sweep(scenario: str, controller: str, param: str, values, seeds,
              out_dir, jobs: int = 1) -> str:
    spec = resolve_scenario(scenario)
    if controller not in CONTROLLER_KINDS:
        raise CodedError("unknown-controller", f"{controller!r}")
    if param not in SWEEP_PARAMS:
        raise CodedError("bad-parameter", f"{param!r}; valid: {SWEEP_PARAMS}")
    if not values:
        raise CodedError("bad-values", "at least one parameter value required")
    if not seeds:
        raise CodedError("bad-seeds", "empty seed range")
    tasks = [
        ((v, s), controller, s, _apply_channel_param(spec, param, v))
        for v in values for s in seeds
    ]
    results = _run_grid(spec, jobs, tasks)
    region_names = sorted({k for m in results.values() for k in m.region_hits})
    columns = list(SWEEP_COLUMNS) + [f"hit_rate_{n}" for n in region_names]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for v in values:
        agg = _aggregate([results[(v, s)] for s in seeds])
        row = [param, repr(v), len(seeds)] + [repr(agg[c]) for c in columns[3:]]
        w.writerow(row)
    text = buf.getvalue()
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"sweep-{spec.sid}-{param}.csv").write_text(text)
    return text


def cmd_render(scenario: str, controller: str | None, seed: int,
               trace_file: str | None, out_dir) -> str:
    spec = resolve_scenario(scenario)
    if trace_file is not None:
        trace = Trace.from_jsonl(pathlib.Path(trace_file).read_text())
    else:
        if controller is None:
            raise CodedError("bad-arguments", "--controller or --trace required")
        if controller not in CONTROLLER_KINDS:
            raise CodedError("unknown-controller", f"{controller!r}")
        trace, _ = _single_run(spec, controller, seed)
    svg = render_svg(trace, spec)
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{spec.sid}-rollout.svg"
    path.write_text(svg)
    return str(path)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gscbench",
                                description="shared-control benchmark harness")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, controller=True, seed=True):
        sp.add_argument("--scenario", required=True,
                        help="catalog id or scenario JSON path")
        if controller:
            sp.add_argument("--controller", required=True)
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("run", help="one rollout; writes trace/metrics/svg")
    common(sp)

    sp = sub.add_parser("compare", help="controllers head to head")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--controllers", required=True,
                    help="comma-separated controller kinds")
    sp.add_argument("--seeds", required=True, help="e.g. 0..49 or 0,1,2")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("sweep", help="metric vs channel parameter")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--controller", required=True)
    sp.add_argument("--param", required=True, metavar="{drop,lag,noise}")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--seeds", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("render", help="SVG of a rollout or recorded trace")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--controller", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace", default=None, help="existing trace.jsonl to render")
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("serve", help="live teleop WebSocket server")
    sp.add_argument("--port", type=int, default=8787)
    sp.add_argument("--host", default="127.0.0.1")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = getattr(args, "out", None) or default_out()
    try:
        if args.command == "run":
            report = cmd_run(args.scenario, args.controller, args.seed, out_dir)
            print(json.dumps({
                "scenario": report.scenario, "controller": report.controller,
                "seed": report.seed, "trace": report.trace_path,
                "metrics": report.metrics.to_json(),
            }, sort_keys=True))
        elif args.command == "compare":
            text = cmd_compare(args.scenario, args.controllers.split(","),
                               parse_seeds(args.seeds), out_dir, args.jobs)
            print(text, end="")
        elif args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            text = cmd_sweep(args.scenario, args.controller, args.param, values,
                             parse_seeds(args.seeds), out_dir, args.jobs)
            print(text, end="")
        elif args.command == "render":
            path = cmd_render(args.scenario, args.controller, args.seed,
                              args.trace, out_dir)
            print(path)
        elif args.command == "serve":
            from .server import serve

            serve(host=args.host, port=args.port)
    except CodedError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"failure: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
