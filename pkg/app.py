import argparse
import logging
import sys
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from eptrap.errors import ConfigError, EptrapError, NumericalError
from utils import log_level

# Version
__version__ = "0.1.0"

# Load environment variables
load_dotenv()

# Configure logging on stderr so stdout stays machine-readable
logging.basicConfig(
    level=log_level(),
    format="%(asctime)s - %(levelname)s - %(message)s",
    handlers=[
        logging.StreamHandler(),
    ],
)

logger = logging.getLogger(__name__)

from cli import (  # noqa: E402
    cmd_eig,
    cmd_ep_cycle,
    cmd_ep_find,
    cmd_observe,
    cmd_scenario,
    cmd_selftest,
    cmd_sweep,
)


class _Parser(argparse.ArgumentParser):
    """Usage errors are config errors (exit 1), not argparse's exit 2"""

    def error(self, message):
        raise ConfigError(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eptrap", description="Non-Hermitian spectra, exceptional points and resonance trapping")
    parser.add_argument("--version", action="version", version=f"eptrap {__version__}")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    def config_command(name: str, handler, help_text: str, default_out: Optional[str] = None):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("config", help="JSON config document")
        sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="Dotted config override")
        sub.add_argument("--out", default=default_out, help="Output directory")
        sub.add_argument("--workers", type=int, default=None, help="Worker threads (capped by EPTRAP_THREADS)")
        sub.set_defaults(handler=handler)
        return sub

    config_command("eig", cmd_eig, "Print the annotated spectrum of a model")
    config_command("sweep", cmd_sweep, "Continuity-matched branches over the config grid", default_out=".")
    config_command("ep-find", cmd_ep_find, "Locate an exceptional point")
    config_command("ep-cycle", cmd_ep_cycle, "Encircle a located exceptional point")
    observe = config_command("observe", cmd_observe, "Requested observable series as CSV", default_out=".")
    observe.add_argument("--svg", action="store_true", help="Also write one SVG plot per series")

    scenario = commands.add_parser("scenario", help="Run a canned experiment and write its bundle")
    scenario.add_argument("name", nargs="?", help="Scenario name")
    scenario.add_argument("--all", action="store_true", help="Run every registered scenario")
    scenario.add_argument("--from-manifest", default=None, metavar="PATH", help="Re-run an emitted manifest")
    scenario.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="Dotted override")
    scenario.add_argument("--out", default="bundles", help="Bundle root directory")
    scenario.add_argument("--svg", action="store_true", help="Also write one SVG plot per series")
    scenario.add_argument("--workers", type=int, default=None, help="Worker threads (capped by EPTRAP_THREADS)")
    scenario.set_defaults(handler=cmd_scenario)

    selftest = commands.add_parser("selftest", help="Run the invariant suite")
    selftest.add_argument("--seed", type=int, default=0, help="Seed of the random inputs")
    selftest.add_argument("--out", default=None, help="Directory for selftest.json")
    selftest.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logger.info(f"🚀 eptrap v{__version__}: {args.command}")
        return args.handler(args)
    except EptrapError as e:
        logger.debug(f"❌ {e.one_line()}")
        print(e.one_line(), file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        err = ConfigError(f"invalid input: {e.errors()[0]['msg']}")
        print(err.one_line(), file=sys.stderr)
        return err.exit_code
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        logger.debug("❌ Unhandled numerical failure", exc_info=True)
        err = NumericalError(f"{type(e).__name__}: {e}")
        print(err.one_line(), file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
