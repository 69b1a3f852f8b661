"""Command-line hooks that prepare the runtime before a stage executes."""
import argparse
import logging
import os

from .initializer import init_torch
from .utils import ValidFile

ENABLED = os.getenv("PAIRGEN_HOOKS_ENABLED", "True").lower() not in ("0", "false", "no")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def pre_init(parser: argparse.ArgumentParser):
    """Pre-init hook: register the options shared by every subcommand.

    Args:
        parser (argparse.ArgumentParser): Argument parser used to parse the
        command line.
    """
    global ENABLED
    if not ENABLED:
        return

    if parser:
        parser.add_argument(
            "--config",
            help="Path to a JSON configuration file.",
            type=str,
            action=ValidFile,
            dest="config",
            default=None,
        )
        parser.add_argument(
            "--set",
            help="Override one configuration value, section.key=value. May repeat.",
            action="append",
            dest="overrides",
            default=[],
            metavar="SECTION.KEY=VALUE",
        )
        parser.add_argument(
            "--log-level",
            help="Logging level.",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            dest="log_level",
            default="INFO",
        )


def post_init(args: argparse.Namespace = None, seed: int = None):
    """Post-init hook: configure logging and seed the runtime.

    Args:
        args (argparse.Namespace, optional): Command line arguments.
        seed (int, optional): Global seed; skipped when None.
    """
    global ENABLED
    if not ENABLED:
        return

    level = getattr(args, "log_level", None) or "INFO"
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT)
    logging.getLogger("pairgen").setLevel(getattr(logging, level))

    if seed is not None:
        init_torch(seed=seed)
