"""Command-line entry point.

Each subcommand loads a scenario file, keeps the scenarios of its kind and
runs them in declaration order, printing one line per scenario. ``run``
executes every scenario regardless of kind; ``validate`` checks a config (if
given) and runs the seeded classifier and gradient cross-checks.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .control import ADJOINT_MODES
from .runner import _write_csv, fmt_full, run_one, write_manifest
from .scenarios import KINDS, ScenarioError, load_scenarios

COMMANDS = KINDS + ("run", "validate")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popharvest",
        description="Simulate, classify and optimally harvest discrete population maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run {name} scenarios" if name in KINDS else None)
        p.add_argument(
            "--config",
            required=name != "validate",
            help="scenario YAML file, or the name of a bundled scenario",
        )
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=_seed, default=0, help="seed for randomized property sweeps")
        p.add_argument("--adjoint-mode", choices=ADJOINT_MODES, default=None,
                       help="override the adjoint mode of optimize/table1 scenarios")
        if name == "validate":
            p.add_argument("--draws", type=int, default=1000, help="random draws per closed-form check")
            p.add_argument("--jury-draws", type=int, default=100_000, help="random Jury pairs")
    return parser


def _run_validate(args, out: Path) -> int:
    from .validation import run_all

    status = 0
    if args.config:
        path, scenarios = load_scenarios(args.config)
        print(f"{path.name}: {len(scenarios)} scenario(s) valid")
    results = run_all(seed=args.seed, draws=args.draws, jury_draws=args.jury_draws)
    rows = []
    for res in results:
        print(("PASS " if res.ok else "FAIL ") + res.line())
        rows.append([res.name, str(res.draws), str(res.compared), str(res.agreed),
                     str(res.skipped_band), str(res.indeterminate), fmt_full(res.worst),
                     "pass" if res.ok else "fail"])
        if not res.ok:
            status = 1
    _write_csv(out / "validation.csv",
               ["check", "draws", "compared", "agreed", "band_skipped", "indeterminate", "worst", "status"],
               rows)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.command == "validate":
            return _run_validate(args, out)
        path, scenarios = load_scenarios(args.config)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command != "run":
        scenarios = [s for s in scenarios if s.kind == args.command]
        if not scenarios:
            print(f"error: {path.name}: no '{args.command}' scenarios", file=sys.stderr)
            return 2

    results = []
    for sc in scenarios:
        try:
            res = run_one(sc, out, args.adjoint_mode)
        except ValueError as exc:
            print(f"error: {path.name}: {sc.name}: {exc}", file=sys.stderr)
            return 1
        print(f"{res.name} [{res.kind}] {res.summary}")
        results.append(res)
    settings = {"adjoint_mode": args.adjoint_mode, "seed": args.seed}
    write_manifest(out, path, args.command, settings, results)
    return 0


if __name__ == "__main__":
    sys.exit(main())
