"""Command-line entry point.

Exit codes: 0 success, 1 golden-check failure, 2 bad spec or arguments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import ExperimentSpec, oracle_report, run_experiment, verify_goldens
from .errors import IntroplanError, SpecError


def _parse_sizes(text: str) -> list[int]:
    sizes: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, _, hi = part.partition("..")
            sizes.extend(range(int(lo), int(hi) + 1))
        elif part:
            sizes.append(int(part))
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="introplan",
        description="Milestone-directed planning benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment sweep to CSV")
    run.add_argument("--spec", help="JSON experiment spec file")
    run.add_argument("--domain", help="domain id: grid, blocks, drawers:N, bins:N")
    run.add_argument("--sizes", help="sizes, e.g. 2..20 or 4,6,8")
    run.add_argument("--planners", help="comma-separated planner specs")
    run.add_argument("--episodes", type=int, default=100)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="results.csv")
    run.add_argument("--summary", default=None)
    run.add_argument("--node-cap", type=int, default=5_000_000)
    run.add_argument("--time-cap", type=float, default=60.0)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--normalize", choices=("auto", "oracle", "none"), default="auto")

    goldens = sub.add_parser("verify-goldens", help="run the pinned fixture checks")
    goldens.add_argument("--json", dest="json_out", help="also write a JSON report here")

    oracle = sub.add_parser("oracle", help="dump the reachability graph of an instance")
    oracle.add_argument("--fixture", required=True, help="instance file path")
    oracle.add_argument("--state-cap", type=int, default=100_000)
    oracle.add_argument("--dump", action="store_true", help="list states and transitions")
    return parser


def _spec_from_args(args) -> ExperimentSpec:
    if args.spec:
        if args.domain or args.sizes or args.planners:
            raise SpecError("--spec is exclusive with --domain/--sizes/--planners")
        spec = ExperimentSpec.from_json(Path(args.spec).read_text())
        if args.out != "results.csv":
            spec.out = args.out
        return spec
    if not (args.domain and args.sizes and args.planners):
        raise SpecError("run needs either --spec or --domain, --sizes and --planners")
    spec = ExperimentSpec(
        domain=args.domain,
        sizes=_parse_sizes(args.sizes),
        planners=[p.strip() for p in args.planners.split(",") if p.strip()],
        episodes=args.episodes,
        seed=args.seed,
        out=args.out,
        node_cap=args.node_cap,
        time_cap=args.time_cap,
        workers=args.workers,
        normalize=args.normalize,
    )
    spec.validate()
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = _spec_from_args(args)
            rows, csv_path, summary_path = run_experiment(
                spec, out_path=args.out if args.spec is None else spec.out,
                summary_path=args.summary,
            )
            print(f"wrote {len(rows)} row(s) to {csv_path}; summary at {summary_path}")
            return 0
        if args.command == "verify-goldens":
            report = verify_goldens()
            print(report.to_text())
            if args.json_out:
                Path(args.json_out).write_text(report.to_json())
            return 0 if report.passed else 1
        if args.command == "oracle":
            text = Path(args.fixture).read_text()
            print(oracle_report(text, state_cap=args.state_cap, dump=args.dump))
            return 0
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntroplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable command")


if __name__ == "__main__":
    sys.exit(main())
