"""Command-line front end: ``pairsource run``, ``pairsource studies``."""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import __version__
from .scenario import HELP_UNITS, STUDIES, ScenarioError, load_scenario

EXIT_USAGE = 2
EXIT_PHYSICS = 1


def list_studies() -> str:
    width = max(map(len, STUDIES))
    return "\n".join(f"{name:<{width}}  {text}" for name, text in STUDIES.items())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairsource",
        description="Spectral purity, coupling and interference predictions for type-II "
        "periodically poled photon-pair sources.",
        epilog=HELP_UNITS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run",
        help="run the study named in a scenario file",
        epilog=HELP_UNITS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    run.add_argument("scenario", type=Path, help="scenario INI file")
    run.add_argument("--out", type=Path, required=True, help="output directory (created if missing)")
    run.add_argument("--grid", type=int, metavar="N", help="override the frequency grid point count")
    run.add_argument("--pm", choices=["sinc", "gaussian"], help="override the phase-matching model")
    run.add_argument(
        "--seedless",
        action="store_true",
        help="accepted for compatibility; every study is deterministic and uses no random numbers",
    )

    sub.add_parser("studies", help="list the available studies")
    return parser


def _run(args) -> int:
    from .studies import run_scenario  # numerics only when a run is requested

    scen = load_scenario(args.scenario)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = run_scenario(scen, args.out, args.grid, args.pm)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    for line in out.lines:
        print(line)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "studies":
        print(list_studies())
        return 0
    try:
        return _run(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
