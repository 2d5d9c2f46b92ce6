"""``hyrrt`` command line: plan, simulate, bench, export."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .bench import run_bench
from .gallery import GALLERY, get_entry
from .io import emit_plot_data, export_plan, gallery_problem, load_plan, load_problem, plan_to_json
from .library import FlowInputSignal
from .planner import hyrrt
from .simulate import METHODS, IntegratorScheme, continuous_simulator

EXIT_FOUND = 0
EXIT_EXHAUSTED = 2


def _vector(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace(" ", "").split(",") if v], dtype=float)


def _load(problem: str):
    if Path(problem).is_file():
        return load_problem(problem)
    if problem in GALLERY:
        return gallery_problem(problem)
    raise SystemExit(f"error: {problem!r} is neither a problem file nor a gallery id ({', '.join(GALLERY)})")


def cmd_plan(args) -> int:
    loaded = _load(args.problem)
    cfg = loaded.config
    overrides = {
        "seed": args.seed,
        "max_iter": args.max_iter,
        "p_n": args.p_n,
        "p_fg": args.p_fg,
        "eps": args.eps,
        "mode": args.mode,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    res = hyrrt(loaded.problem, loaded.library, cfg)
    s = res.stats
    print(
        f"{'found' if res.success else 'no plan'}: iterations={s.iterations} "
        f"vertices={s.vertices} time={s.wall_time:.3f}s",
        file=sys.stderr,
    )
    if res.success:
        if args.out:
            export_plan(res.plan, args.out)
        else:
            print(plan_to_json(res.plan))
        if args.tree_out:
            emit_plot_data(res.tree, args.tree_out)
        return EXIT_FOUND
    if args.tree_out:
        emit_plot_data(res.tree, args.tree_out)
    return EXIT_EXHAUSTED


def cmd_simulate(args) -> int:
    entry = get_entry(args.system)
    H, _ = entry.factory(json.loads(args.params) if args.params else None)
    scheme = IntegratorScheme(method=args.method, step=args.step if args.step else entry.step)
    level = _vector(args.signal_level)
    if len(level) == 1 and H.m > 1:
        level = np.repeat(level, H.m)
    x0 = _vector(args.x0)
    if len(x0) != H.n:
        raise SystemExit(f"error: --x0 needs {H.n} values for {args.system}")
    if args.signal_duration > 0:
        psi = continuous_simulator(H, args.rule, x0, FlowInputSignal(args.signal_duration, level), scheme)
    else:
        psi = continuous_simulator(H, args.rule, x0, FlowInputSignal(1.0, level), scheme, duration=0.0)
    if args.out:
        export_plan(psi, args.out)
    else:
        print(plan_to_json(psi))
    return 0


def cmd_bench(args) -> int:
    loaded = _load(args.problem)
    if args.max_iter is not None:
        loaded.config = replace(loaded.config, max_iter=args.max_iter)
    summary, _ = run_bench(loaded, args.trials, args.seed, Path(args.out_dir), mode=args.mode)
    print(json.dumps(asdict(summary), indent=2))
    return 0


def cmd_export(args) -> int:
    psi = load_plan(args.plan)
    if args.format == "plot":
        emit_plot_data(psi, args.out)
    else:
        export_plan(psi, args.out, args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyrrt", description="Motion planning for hybrid systems.")
    sub = p.add_subparsers(dest="command", required=True)

    pl = sub.add_parser("plan", help="search for a motion plan")
    pl.add_argument("--problem", required=True, help="problem JSON file or gallery id")
    pl.add_argument("--seed", type=int)
    pl.add_argument("--max-iter", type=int)
    pl.add_argument("--p-n", type=float)
    pl.add_argument("--p-fg", type=float)
    pl.add_argument("--eps", type=float)
    pl.add_argument("--mode", choices=["random", "greedy"])
    pl.add_argument("--out", help="plan file (.json or .csv); stdout if omitted")
    pl.add_argument("--tree-out", help="write tree edges as plot data")
    pl.set_defaults(func=cmd_plan)

    si = sub.add_parser("simulate", help="simulate one constant-input flow")
    si.add_argument("--system", required=True, choices=sorted(GALLERY))
    si.add_argument("--params", help="JSON params block for the system")
    si.add_argument("--x0", required=True, help="comma-separated initial state")
    si.add_argument("--signal-level", default="0", help="comma-separated input value")
    si.add_argument("--signal-duration", type=float, default=0.1)
    si.add_argument("--rule", choices=["flow", "jump"], default="flow")
    si.add_argument("--method", choices=METHODS, default="rk4")
    si.add_argument("--step", type=float)
    si.add_argument("--out")
    si.set_defaults(func=cmd_simulate)

    be = sub.add_parser("bench", help="run seeded planner trials")
    be.add_argument("--problem", default="bouncing_ball", help="problem JSON file or gallery id")
    be.add_argument("--trials", type=int, default=100)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--mode", choices=["random", "greedy"])
    be.add_argument("--max-iter", type=int)
    be.add_argument("--out-dir", required=True)
    be.set_defaults(func=cmd_bench)

    ex = sub.add_parser("export", help="convert a plan file")
    ex.add_argument("--plan", required=True)
    ex.add_argument("--format", choices=["json", "csv", "plot"], required=True)
    ex.add_argument("--out", required=True)
    ex.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
