"""Command line entry point: ``qis gen-states | train | evaluate | phase-diagram | bloch-dump``."""

import argparse
import logging
import sys

from . import experiment
from .errors import OrderingError, QisError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ORDERING = 3

COMMANDS = {
    "gen-states": experiment.cmd_gen_states,
    "train": experiment.cmd_train,
    "evaluate": experiment.cmd_evaluate,
    "phase-diagram": experiment.cmd_phase_diagram,
    "bloch-dump": experiment.cmd_bloch_dump,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qis", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--task", choices=("2-class", "3-class"))
        p.add_argument("--scenario", choices=("unbiased", "biased"))
        if name == "phase-diagram":
            p.add_argument("--ppm", action="store_true", help="also write P6 rasters")
    return parser


def load_config(args):
    cfg = experiment.ExperimentConfig.load(args.config) if args.config else experiment.ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.paths.output = args.out
    if args.task is not None:
        cfg.task = args.task
    if args.scenario is not None:
        cfg.scenario = args.scenario
    if getattr(args, "ppm", False):
        cfg.write_ppm = True
    cfg.__post_init__()
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args)
        COMMANDS[args.command](cfg)
    except OrderingError as exc:
        print(f"qis {args.command}: ordering check failed: {exc}", file=sys.stderr)
        return EXIT_ORDERING
    except (QisError, ValueError, OSError) as exc:
        print(f"qis {args.command}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
