import argparse
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from .commands import exact, oracle, scan, solve
from .services.config import build_config
from .services.errors import FtnSolveError

logger = logging.getLogger("ftnsolve")

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

COMMANDS = {
    "solve": "ground-state solve of one configuration",
    "scan": "sweep D, chi, gamma or gamma3 and tabulate the results",
    "exact": "closed-form ground energy and critical coupling",
    "oracle": "dense exact diagonalization and full-tensor descent",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftnsolve",
        description="Functional tensor network solver for coupled harmonic oscillators",
        epilog="Any --section.key=value argument overrides the configuration, e.g. --model.gamma=-0.5",
        allow_abbrev=False,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, allow_abbrev=False)
        sub.add_argument("--config", type=str, help="YAML configuration file")
        sub.add_argument("--preset", type=str, help="fig2, fig3, fig4, fig5 or decoupled")
        sub.add_argument("--seed", type=int, help="random seed of the initial state")
        sub.add_argument("--out", type=str, help="output directory")
        sub.add_argument("--verbose", "-v", action="store_true", help="debug logging")
        if name == "solve":
            sub.add_argument("--resume", type=str, help="checkpoint directory to continue from")
        if name == "exact":
            sub.add_argument("--dump-operators", type=str, metavar="DIR",
                             help="also write the D, X and kinetic matrices as CSV")
    return parser


def configure_logging(verbose: bool = False):
    level = logging.DEBUG if verbose else os.getenv("FTNSOLVE_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    # Load environment variables
    load_dotenv()

    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    unknown = [item for item in extra if not (item.startswith("--") and "=" in item)]
    if unknown:
        print(f"Error: unrecognized arguments: {' '.join(unknown)}", file=sys.stderr)
        return 2

    configure_logging(args.verbose)

    try:
        config = build_config(args.config, args.preset, extra, args.seed, args.out)
        if args.command == "solve":
            solve.run(config, resume=args.resume)
        elif args.command == "scan":
            scan.run(config)
        elif args.command == "exact":
            exact.run(config, dump_dir=args.dump_operators)
        else:
            oracle.run(config)
    except FtnSolveError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error in {args.command}: {e}", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
