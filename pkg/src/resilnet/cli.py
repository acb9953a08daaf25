"""Command-line surface: simulate, plan, gne, metrics, validate.

Exit codes: 0 success, 1 invalid input (bad flags, unreadable or invalid
files), 2 runtime failure (solver did not converge, unexpected error).
Outputs are deterministic for a fixed config and seed; the manifest's
wall-clock duration is the only field that varies between reruns.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .graph_core import build_proximity_graph
from .controller import CENTRALIZED, plan_step, plan_step_decentralized, two_hop_neighborhoods
from .gne import gne_solve
from .scenario_io import (
    ConfigError,
    RunManifest,
    config_hash,
    dumps_canonical,
    emit_manifest,
    emit_report,
    emit_trace,
    gne_from_dict,
    gne_record,
    parse_gne,
    parse_scenario,
    parse_trace,
    plan_record,
    scenario_from_dict,
    _load_yaml,
)
from .simulator import (
    BaselineSpec,
    compute_resilience_metrics,
    initial_positions,
    planning_profile,
    run_scenario,
)

_OUT_ENV = "RESILNET_OUT"


def _out_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get(_OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    raw = _load_yaml(args.scenario)
    cfg = scenario_from_dict(raw)
    out = _out_dir(args.out)
    trace = run_scenario(cfg)
    trace_path = out / "trace.jsonl"
    emit_trace(trace, trace_path)
    outputs = {"trace": str(trace_path)}
    if cfg.events:
        onset = min(ev.start for ev in cfg.events)
        report = compute_resilience_metrics(trace, cfg.baseline, onset)
        report_path = out / "resilience.json"
        emit_report(report, report_path)
        outputs["report"] = str(report_path)
    manifest = RunManifest(
        version=__version__,
        config_hash=config_hash(raw),
        seed=cfg.rng_seed,
        duration_s=time.monotonic() - t0,
        outputs=outputs,
    )
    emit_manifest(manifest, out / "manifest.json")
    return 0


def _cmd_plan(args: argparse.Namespace) -> int:
    cfg = parse_scenario(args.scenario)
    profile = planning_profile(cfg)
    pos = initial_positions(cfg)
    for _ in range(args.steps):
        if cfg.opts.mode == CENTRALIZED:
            plan = plan_step(pos, profile, cfg.opts)
        else:
            seen = build_proximity_graph(pos, profile)
            plan = plan_step_decentralized(
                pos, two_hop_neighborhoods(seen), profile, cfg.opts
            )
        graph = build_proximity_graph(plan.targets, profile)
        print(dumps_canonical(plan_record(plan, cfg.agent_ids, graph)))
        pos = plan.targets
    return 0


def _cmd_gne(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    raw = _load_yaml(args.params)
    prob = gne_from_dict(raw)
    out = _out_dir(args.out)
    state = gne_solve(
        prob.costs,
        prob.sender_utils,
        prob.receiver_utils,
        damping=prob.damping,
        tol=prob.tol,
        max_iters=prob.max_iters,
        p0=prob.p0,
    )
    result_path = out / "gne.json"
    result_path.write_text(dumps_canonical(gne_record(state)) + "\n")
    residuals_path = out / "residuals.jsonl"
    with open(residuals_path, "w") as fh:
        for k, r in enumerate(state.residual_history, start=1):
            fh.write(dumps_canonical({"iteration": k, "residual": r}) + "\n")
    manifest = RunManifest(
        version=__version__,
        config_hash=config_hash(raw),
        seed=0,  # solver is deterministic; no randomness to seed
        duration_s=time.monotonic() - t0,
        outputs={"result": str(result_path), "residuals": str(residuals_path)},
    )
    emit_manifest(manifest, out / "manifest.json")
    if not state.converged:
        print(
            f"solver did not converge in {state.iterations} iterations "
            f"(last residual {state.residual:.3e})",
            file=sys.stderr,
        )
        return 2
    return 0


def _parse_baseline_flag(text: str) -> BaselineSpec:
    if text == "pre_event":
        return BaselineSpec()
    if text.startswith("fixed:"):
        try:
            return BaselineSpec("fixed", float(text.split(":", 1)[1]))
        except ValueError as exc:
            raise ConfigError([f"baseline: bad fixed value in {text!r}"]) from exc
    raise ConfigError([f"baseline: expected 'pre_event' or 'fixed:<value>', got {text!r}"])


def _cmd_metrics(args: argparse.Namespace) -> int:
    trace = parse_trace(args.trace)
    baseline = _parse_baseline_flag(args.baseline)
    report = compute_resilience_metrics(
        trace, baseline, args.t2, recovery_fraction=args.recovery_fraction
    )
    print(dumps_canonical(asdict(report)))
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    raw = _load_yaml(args.file)
    if isinstance(raw, dict) and "costs" in raw:
        gne_from_dict(raw)
    else:
        scenario_from_dict(raw)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resilnet",
        description="Resilient multi-agent network control and game solvers.",
    )
    parser.add_argument("--version", action="version", version=f"resilnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write trace, report, manifest")
    p.add_argument("scenario", help="scenario YAML file")
    p.add_argument("--out", help=f"output directory (default ${_OUT_ENV} or .)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("plan", help="plan steps without attacks and print each plan")
    p.add_argument("scenario", help="scenario YAML file")
    p.add_argument("--steps", type=int, default=1, help="number of planning steps")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("gne", help="solve a coupled timing + trust game instance")
    p.add_argument("params", help="game parameter YAML file")
    p.add_argument("--out", help=f"output directory (default ${_OUT_ENV} or .)")
    p.set_defaults(func=_cmd_gne)

    p = sub.add_parser("metrics", help="recompute the resilience report from a trace")
    p.add_argument("trace", help="trace file (one JSON record per line)")
    p.add_argument("--t2", type=int, required=True, help="disturbance onset step")
    p.add_argument(
        "--recovery-fraction",
        type=float,
        default=None,
        help="fraction of baseline counting as recovered (default 0.9)",
    )
    p.add_argument(
        "--baseline",
        default="pre_event",
        help="'pre_event' (mean before onset) or 'fixed:<value>'",
    )
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("validate", help="parse and validate a config file")
    p.add_argument("file", help="scenario or game parameter YAML file")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags and 0 on --help / --version
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # solver failures and genuine bugs
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
