"""Shared flag parsing, logging setup and error handling for commands."""

import argparse
import logging
import shlex
import sys
from typing import Callable

from embench.errors import EmbenchError, UsageError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class FlagParser(argparse.ArgumentParser):
    """ArgumentParser that reports bad flags as UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def flag_parser(prog: str, description: str) -> FlagParser:
    parser = FlagParser(prog=prog, description=description)
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--quiet", action="store_true", help="warnings and errors only")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Log to stderr; stdout is reserved for results."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(stream=sys.stderr, format=LOG_FORMAT, level=level)
    root.setLevel(level)


def parse_flags(parser: FlagParser, arg: str) -> argparse.Namespace:
    try:
        argv = shlex.split(arg)
    except ValueError as e:
        raise UsageError(f"{parser.prog}: {e}") from e
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    return args


def run_command(handler: Callable[[str], None], arg: str) -> int:
    """Run a command handler and return its exit code."""
    try:
        handler(arg)
    except EmbenchError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except SystemExit as e:  # --help
        return e.code if isinstance(e.code, int) else 0
    return 0


def parse_pairs(values: list[str] | None, flag: str) -> list[tuple[str, str]]:
    """Split repeated NAME=VALUE flags, keeping their order."""
    pairs = []
    for value in values or []:
        name, sep, rest = value.partition("=")
        if not sep or not name or not rest:
            raise UsageError(f"{flag} expects NAME=VALUE, got {value!r}")
        pairs.append((name, rest))
    return pairs
