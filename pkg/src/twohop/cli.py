"""Command-line entry point: solve, verify, oracle, simulate, sweep.

Exit codes: 0 ok, 1 verification failure or degenerate instance, 2 parse or
usage error, 3 unsupported instance.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as tio
from .core import check_feasibility, check_optimality_properties
from .exceptions import (InvalidInstanceError, TwoHopError,
                         UnsupportedInstanceError)
from .experiments import simulate, summary_path, sweep_ts1, write_sweep, write_trials
from .oracle import GridConfig, grid_oracle
from .solver import solve

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNSUPPORTED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _lambdas(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}")
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("lambdas must be positive")
    return vals


def cmd_solve(args) -> int:
    inst = tio.load_instance(args.input)
    sol = solve(inst)
    tio.dump_json(tio.policy_to_dict(sol.policy), args.output)
    print(sol.summary())
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = tio.load_instance(args.instance)
    policy = tio.load_policy(args.policy)
    rep = check_feasibility(inst, policy)
    print("feasibility:", rep)
    if not rep.feasible:
        return EXIT_FAIL
    props = check_optimality_properties(inst, policy)
    print("properties:")
    print(props)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = tio.load_instance(args.input)
    cfg = GridConfig(time_step=args.step, energy_splits=args.splits)
    res = grid_oracle(inst, cfg)
    print(f"oracle throughput: {res.throughput:.12g} nats")
    for k, v in res.params.items():
        print(f"  {k} = {v:.12g}")
    try:
        sol = solve(inst)
    except TwoHopError as exc:
        print(f"solver failed: {exc}")
        return EXIT_FAIL
    print(f"solver throughput: {sol.throughput:.12g} nats ({sol.label})")
    print(f"delta (solver - oracle): {sol.throughput - res.throughput:.3e}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    records = simulate(args.lam, args.trials, args.seed)
    write_trials(args.out, records, args.seed)
    print(f"wrote {len(records)} trials to {args.out} and means to {summary_path(args.out)}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.param != "ts1":
        print(f"error: unsupported sweep parameter {args.param!r}", file=sys.stderr)
        return EXIT_USAGE
    base = tio.load_instance(args.base)
    try:
        records = sweep_ts1(base, args.start, args.stop, args.step)
    except ValueError as exc:
        if isinstance(exc, TwoHopError):
            raise
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_sweep(args.out, records)
    print(f"wrote {len(records)} samples to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twohop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="optimal policy for an instance file")
    s.add_argument("--input", required=True, type=Path)
    s.add_argument("--output", required=True, type=Path)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", help="feasibility and property report of a policy")
    s.add_argument("--instance", required=True, type=Path)
    s.add_argument("--policy", required=True, type=Path)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("oracle", help="grid-search reference value")
    s.add_argument("--input", required=True, type=Path)
    s.add_argument("--step", type=float, default=None, help="time step (default 2e-3*T)")
    s.add_argument("--splits", type=int, default=500)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("simulate", help="Monte Carlo optimal vs baseline")
    s.add_argument("--lambda", dest="lam", required=True, type=_lambdas)
    s.add_argument("--trials", required=True, type=int)
    s.add_argument("--seed", required=True, type=int)
    s.add_argument("--out", required=True, type=Path)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="throughput and regions against t_s1")
    s.add_argument("--base", required=True, type=Path)
    s.add_argument("--param", required=True)
    s.add_argument("--from", dest="start", required=True, type=float)
    s.add_argument("--to", dest="stop", required=True, type=float)
    s.add_argument("--step", required=True, type=float)
    s.add_argument("--out", required=True, type=Path)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedInstanceError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (InvalidInstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TwoHopError, ValueError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
