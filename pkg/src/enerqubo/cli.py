"""Command-line interface: formulate, solve, oracle, generate, bench, report.

Exit codes: 0 success, 1 usage error, 2 infeasible or oracle unavailable,
3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bench import (
    BenchReport,
    GenSpec,
    deviation_stats,
    gen_hens,
    gen_uc,
    histogram_rows,
    run_bench,
)
from .errors import InfeasibleError, InternalCheckError, OracleSizeError, UsageError
from .hens import hens_instance_from_dict, hens_instance_to_dict, hens_oracle
from .qap import QapSolution, parse_qaplib, qap_oracle
from .qubo import Qubo
from .solvers import solve
from .uc import uc_instance_from_dict, uc_instance_to_dict, uc_oracle
from .varmap import PenaltyWeights


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="enerqubo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("formulate", help="build a QUBO from a problem instance")
    p.add_argument("--family", required=True, choices=["qap", "uc", "hens"])
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--grids", type=int, help="grid count (uc and hens)")
    p.add_argument("--penalty-a", type=float, dest="penalty_a")
    p.add_argument("--penalty-b", type=float, dest="penalty_b")
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", help="run a solver on a QUBO file")
    p.add_argument("--qubo", required=True)
    p.add_argument(
        "--solver", required=True, choices=["brute", "sa", "tabu", "decomp", "vqe"]
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reads", type=int)
    p.add_argument("--out")

    p = sub.add_parser("oracle", help="exact domain optimum of an instance")
    p.add_argument("--family", required=True, choices=["qap", "uc", "hens"])
    p.add_argument("--in", dest="infile", required=True)

    p = sub.add_parser("generate", help="write a random problem instance")
    p.add_argument("--family", required=True, choices=["uc", "hens"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--units", type=int, default=3)
    p.add_argument("--sources", type=int, default=4)
    p.add_argument("--sinks", type=int, default=3)
    p.add_argument("--grids", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="run a benchmark suite file")
    p.add_argument("--suite", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="summarize a benchmark report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--stats", action="store_true")
    p.add_argument("--histogram-csv", dest="histogram_csv")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--figure", help="render a deviation histogram image")
    return parser


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"bad JSON in {path}: {exc}") from exc


def _load_family_instance(family: str, path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if family == "qap":
        try:
            return parse_qaplib(text)
        except ValueError as exc:
            raise UsageError(f"bad QAPLIB file {path}: {exc}") from exc
    try:
        data = json.loads(text)
        if family == "uc":
            return uc_instance_from_dict(data)
        return hens_instance_from_dict(data)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad {family} instance {path}: {exc}") from exc


def _cmd_formulate(args) -> int:
    from .bench import _formulate

    instance = _load_family_instance(args.family, args.infile)
    weights = None
    if args.penalty_a is not None:
        weights = PenaltyWeights(args.penalty_a, args.penalty_b or 0.0)
    model, vm, _ = _formulate(instance, args.family, args.grids, weights)
    with open(args.out, "w") as fh:
        json.dump(model.to_dict(), fh)
    print(
        f"wrote {args.out}: {model.num_vars} variables, "
        f"{len(model.quadratic)} couplings, offset {model.offset:g}"
    )
    return 0


def _cmd_solve(args) -> int:
    model = Qubo.from_dict(_read_json(args.qubo))
    options = {}
    if args.reads is not None:
        options["reads"] = args.reads
    try:
        result = solve(model, args.solver, seed=args.seed, **options)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    best = result.best()
    print(f"best energy {best.energy:.9g}")
    print("bits " + "".join(str(b) for b in best.bits))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result.to_dict(), fh)
        print(f"wrote {args.out}")
    return 0


def _cmd_oracle(args) -> int:
    instance = _load_family_instance(args.family, args.infile)
    if args.family == "qap":
        sol = qap_oracle(instance)
        assert isinstance(sol, QapSolution)
        print(f"optimum {sol.objective:.9g}")
        print("perm " + " ".join(str(p) for p in sol.perm))
    elif args.family == "uc":
        sol = uc_oracle(instance)
        print(f"optimum {sol.total:.9g}")
        print("on " + " ".join("1" if y else "0" for y in sol.on))
        print("power " + " ".join(f"{p:.6g}" for p in sol.power))
    else:
        sol = hens_oracle(instance)
        print(f"optimum {sol.total_cost:.9g}")
        print("matches")
        for row in sol.matches:
            print("  " + " ".join(str(int(v)) for v in row))
    return 0


def _cmd_generate(args) -> int:
    spec = GenSpec(
        family=args.family,
        units=args.units,
        sources=args.sources,
        sinks=args.sinks,
        grids=args.grids,
        seed=args.seed,
    )
    if args.family == "uc":
        data = uc_instance_to_dict(gen_uc(spec))
    else:
        data = hens_instance_to_dict(gen_hens(spec))
    with open(args.out, "w") as fh:
        json.dump(data, fh, indent=2)
    print(f"wrote {args.out}")
    return 0


def _cmd_bench(args) -> int:
    suite = _read_json(args.suite)
    report = run_bench(suite, base_dir=Path(args.suite).parent)
    report.to_csv(args.out)
    print(f"wrote {args.out}: {len(report.rows)} rows")
    return 0


def _cmd_report(args) -> int:
    report = BenchReport.from_csv(args.infile)
    if args.stats or not (args.histogram_csv or args.figure):
        stats = deviation_stats(report)
        if not stats:
            print("empty report")
        for family, entry in stats.items():
            line = (
                f"{family}: {entry['rows']} rows, "
                f"{entry['feasible']} feasible ({entry['feasibility_rate']:.0%})"
            )
            if "mean_deviation_pct" in entry:
                line += (
                    f", deviation min {entry['min_deviation_pct']:.3f}% "
                    f"mean {entry['mean_deviation_pct']:.3f}% "
                    f"max {entry['max_deviation_pct']:.3f}%"
                )
            print(line)
    if args.histogram_csv:
        rows = histogram_rows(report, bins=args.bins)
        with open(args.histogram_csv, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["family", "bin_left", "bin_right", "count"]
            )
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.histogram_csv}")
    if args.figure:
        from .plotting import render_deviation_figure

        render_deviation_figure(report, args.figure, bins=args.bins)
        print(f"wrote {args.figure}")
    return 0


_COMMANDS = {
    "formulate": _cmd_formulate,
    "solve": _cmd_solve,
    "oracle": _cmd_oracle,
    "generate": _cmd_generate,
    "bench": _cmd_bench,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InfeasibleError, OracleSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InternalCheckError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
