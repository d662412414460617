"""Command-line entry point.

Subcommands: plan, grid, compare, confidence, spectrum, mpc, serve.
Exit code 0 on success, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, svg
from .expansion import ExpansionOptions
from .mpc import MpcConfig, mpc_run, spectral_planner
from .tree import SearchBudget, UcbConstants
from .envs import ConfigError, load_env_file
from .envs.loader import EnvBundle


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specplan",
                                     description="Continuous-space tree planning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="environment JSON document")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--budget-iters", type=int, default=None)
        p.add_argument("--budget-ms", type=float, default=None)

    p = sub.add_parser("plan", help="one-shot plan on a config")
    common(p)
    p.add_argument("--svg", action="store_true", help="also emit an SVG value curve")

    p = sub.add_parser("grid", help="branch-length vs budget convergence grid")
    common(p)
    p.add_argument("--H", default="5,10,25,50", type=_int_list)
    p.add_argument("--budgets", default="100,1000,10000", type=_int_list)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("compare", help="method comparison curves")
    common(p)
    p.add_argument("--methods", default="SE-MCTS,SE-PS,UD-MCTS,UD-PS,DPW-MCTS")
    p.add_argument("--H", default="10", type=_int_list)
    p.add_argument("--eta", default="3", type=_int_list)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("confidence", help="visit-concentration profiles")
    common(p)
    p.add_argument("--H", type=int, default=None)
    p.add_argument("--budgets", default="100,1000,10000", type=_int_list)
    p.add_argument("--seeds", type=int, default=5)

    p = sub.add_parser("spectrum", help="controllability heatmap at the start state")
    common(p)
    p.add_argument("--H", type=int, default=None)
    p.add_argument("--svg", action="store_true")

    p = sub.add_parser("mpc", help="receding-horizon run")
    common(p)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--replan", type=int, default=10)
    p.add_argument("--plan-horizon", type=int, default=None)

    p = sub.add_parser("serve", help="driver-assist service")
    p.add_argument("--config", default=None, help="optional tracked-vehicle JSON")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--budget-iters", type=int, default=None)
    p.add_argument("--budget-ms", type=float, default=80.0)
    p.add_argument("--pace", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _budget(bundle: EnvBundle, args) -> SearchBudget:
    iters = args.budget_iters if args.budget_iters is not None else bundle.planner.budget_iters
    ms = args.budget_ms if args.budget_ms is not None else bundle.planner.budget_ms
    if iters is None and ms is None:
        iters = 1000
    return SearchBudget(max_iterations=iters,
                        max_wall_time=ms / 1000.0 if ms is not None else None)


def _seed(bundle: EnvBundle, args) -> int:
    return args.seed if args.seed is not None else bundle.planner.seed


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_plan(args) -> int:
    bundle = load_env_file(args.config)
    result = harness.run_method(bundle, "SE-MCTS", bundle.planner.branch_len,
                                _seed(bundle, args), _budget(bundle, args))
    out = _outdir(args)
    (out / "value_history.csv").write_text(harness.value_history_csv(result))
    traj = result.best_trajectory
    header = ",".join([f"state_{i}" for i in range(traj.states.shape[1])])
    lines = [header] + [",".join(repr(v) for v in row) for row in traj.states]
    (out / "best_trajectory.csv").write_text("\n".join(lines) + "\n")
    if args.svg:
        pts = [(row[0], row[1]) for row in result.root_value_history]
        chart = svg.line_chart({"value_estimate": pts}, title=bundle.name, log_x=True)
        (out / "value_history.svg").write_text(chart)
    print(f"best_return={result.best_return:.6f} nodes={result.node_count} "
          f"iterations={result.iterations}")
    return 0


def cmd_grid(args) -> int:
    bundle = load_env_file(args.config)
    rows = harness.run_convergence_grid(bundle.raw, args.H, args.seeds,
                                        args.budgets, workers=args.workers)
    out = _outdir(args)
    (out / "grid.csv").write_text(harness.grid_csv(rows))
    print(f"grid.csv: {len(rows)} rows")
    return 0


def cmd_compare(args) -> int:
    bundle = load_env_file(args.config)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    budget = args.budget_iters or bundle.planner.budget_iters or 1000
    rows, best = harness.run_method_comparison(bundle.raw, methods, args.H,
                                               args.eta, args.seeds, budget,
                                               workers=args.workers)
    out = _outdir(args)
    (out / "comparison.csv").write_text(harness.comparison_csv(rows, best))
    for method, variant in best.items():
        print(f"best {method}: H={variant[1]} eta={variant[2]}")
    return 0


def cmd_confidence(args) -> int:
    bundle = load_env_file(args.config)
    H = args.H or bundle.planner.branch_len
    rows = harness.run_confidence_profiles(bundle.raw, H, args.budgets, args.seeds)
    out = _outdir(args)
    (out / "confidence.csv").write_text(harness.confidence_csv(rows))
    print(f"confidence.csv: {len(rows)} rows")
    return 0


def cmd_spectrum(args) -> int:
    bundle = load_env_file(args.config)
    H = args.H or bundle.planner.branch_len
    rows = harness.spectrum_rows(bundle, H)
    out = _outdir(args)
    (out / "spectrum.csv").write_text(harness.spectrum_csv(rows))
    if args.svg:
        n = bundle.mdp.state_dim
        matrix = np.zeros((n, n))
        for r, i, v in rows:
            matrix[r, i] = v
        (out / "spectrum.svg").write_text(svg.heatmap(matrix, title=bundle.name))
    print(f"spectrum.csv: {len(rows)} rows")
    return 0


def cmd_mpc(args) -> int:
    bundle = load_env_file(args.config)
    plan_horizon = args.plan_horizon or bundle.mdp.horizon
    opts = ExpansionOptions(branch_len=bundle.planner.branch_len,
                            time_invariant_lin=bundle.planner.time_invariant_lin,
                            gain_mode=bundle.planner.gain_mode)
    budget = _budget(bundle, args)
    planner = spectral_planner(opts, budget,
                               UcbConstants(bundle.planner.c1, bundle.planner.c2,
                                            bundle.planner.c3))
    cfg = MpcConfig(replan_interval=args.replan, plan_horizon=plan_horizon,
                    budget=budget)
    log = mpc_run(bundle.mdp, bundle.x0, planner, cfg, total_steps=args.steps,
                  seed=_seed(bundle, args))
    out = _outdir(args)
    (out / "mpc_log.csv").write_text(log.to_csv())
    print(f"steps={len(log.actions)} total_reward={log.total_reward:.6f} "
          f"safety_events={int(log.safety_events.sum())}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, build_app

    budget_iters = args.budget_iters
    cfg = ServiceConfig(budget_iters=budget_iters,
                        budget_ms=args.budget_ms if budget_iters is None else None,
                        pace=args.pace, seed=args.seed)
    hazard = None
    if args.config:
        bundle = load_env_file(args.config)
        hazard = bundle.hazard
    app = build_app(cfg, hazard)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "plan": cmd_plan,
    "grid": cmd_grid,
    "compare": cmd_compare,
    "confidence": cmd_confidence,
    "spectrum": cmd_spectrum,
    "mpc": cmd_mpc,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
