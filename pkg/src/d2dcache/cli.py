"""Command line front end: ``d2dcache {optimize,analytic,simulate,sweep,compare}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .analytic import overall_report
from .errors import ConfigurationError
from .experiments import (compare_report, csv_columns, evaluate_point, load_spec,
                          rows_to_csv, run_experiment)
from .model import derive_constants
from .simulator import delivery_thresholds, system_policy


def _spec(args):
    spec = load_spec(args.config)
    if getattr(args, "trials", None) is not None:
        spec.trials = args.trials
    if getattr(args, "seed", None) is not None:
        spec.seed = args.seed
    if getattr(args, "out", None) is not None:
        spec.out = args.out
    return spec


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def cmd_optimize(args) -> int:
    spec = _spec(args)
    lines = ["file,beta," + ",".join(f"q_{s}" for s in spec.systems)]
    beta = spec.library.popularity
    qs = [system_policy(s, spec.config, spec.library).q for s in spec.systems]
    for i in range(spec.library.N):
        lines.append(f"{i + 1},{float(beta[i])!r}," + ",".join(repr(float(q[i])) for q in qs))
    _emit("\n".join(lines), args.out)
    return 0


def cmd_analytic(args) -> int:
    spec = _spec(args)
    constants = derive_constants(spec.config, spec.library)
    lines = ["system,p_s,p_d,op,sp_d2d,sp_cell,sp_total"]
    for s in spec.systems:
        policy = system_policy(s, spec.config, spec.library, constants)
        th = delivery_thresholds(policy, spec.config, spec.library, constants)
        r = overall_report(policy, th, spec.config, spec.library, constants)
        lines.append(f"{s},{r.p_s!r},{r.p_d!r},{r.op!r},{r.sp_d2d!r},{r.sp_cell!r},{r.sp_total!r}")
    _emit("\n".join(lines), args.out)
    return 0


def cmd_simulate(args) -> int:
    spec = _spec(args)
    rows = [evaluate_point(spec.config, spec.library, s, spec.trials, spec.seed)
            for s in spec.systems]
    spec.sweep = {}
    _emit(rows_to_csv(rows, csv_columns(spec)).rstrip("\n"), args.out)
    return 0


def cmd_sweep(args) -> int:
    spec = _spec(args)
    try:
        rows = run_experiment(spec)
    except ConfigurationError:
        raise
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).error("sweep aborted: %s", exc)
        return 1
    if spec.out is None:
        print(rows_to_csv(rows, csv_columns(spec)), end="")
    return 0


def cmd_compare(args) -> int:
    source = args.csv or args.out
    _emit(compare_report(source), None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2dcache", description="QoS-aware caching for mmWave D2D networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=False):
        p.add_argument("--config", required=True, help="YAML experiment spec")
        p.add_argument("--out", help="output file (default: stdout)")
        if trials:
            p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
            p.add_argument("--seed", type=int, help="base seed")

    common(sub.add_parser("optimize", help="print caching probabilities"))
    common(sub.add_parser("analytic", help="print the analytic report"))
    common(sub.add_parser("simulate", help="simulate a single point"), trials=True)
    common(sub.add_parser("sweep", help="run the full sweep, write CSV"), trials=True)
    cmp = sub.add_parser("compare", help="S-1/S-2 ratio report from a sweep CSV")
    cmp.add_argument("csv", nargs="?", help="sweep CSV")
    cmp.add_argument("--out", help="sweep CSV (alternative to the positional argument)")
    return parser


COMMANDS = {"optimize": cmd_optimize, "analytic": cmd_analytic, "simulate": cmd_simulate,
            "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "compare" and not (args.csv or args.out):
        print("compare: give the sweep CSV", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
