"""
Command-line entry point for the inductive-logic experiment harness.
Runs one task per invocation from a YAML config and writes its CSV artifacts.
"""

import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from core import InductionError, InvalidInputError, NumericalDegeneracyError, ResourceLimitError
from experiment import TASKS, ConfigError, ExperimentRunner, load_config
from utils import generate_run_summary, write_artifacts

logger = logging.getLogger(__name__)


class ExitCodes:
    OK = 0
    FAILURE = 1
    CONFIG_ERROR = 2
    RESOURCE_LIMIT = 3
    NUMERICAL_DEGENERACY = 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, required=True, help="Path to the experiment YAML")
    common.add_argument("--seed", type=int, default=None, help="Overrides process.seed")
    common.add_argument("--out", type=str, default=None, help="Output directory (overrides output)")
    common.add_argument("--tolerance", type=float, default=None, help="Overrides audit.tolerance")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level")

    parser = argparse.ArgumentParser(
        prog="analogical-induction",
        description="Predictive rules, symmetry audits and convergence studies for inductive logic",
    )
    subparsers = parser.add_subparsers(dest="task", required=True)
    helps = {
        "predict": "Predictive distributions after the configured history",
        "simulate": "Simulate each rule's process and trace its predictions",
        "audit": "Check the symmetry postulates by exhaustive enumeration",
        "converge": "Follow predictions against frequencies on a long stream",
        "compare": "Tabulate several rules' predictions on one stream",
    }
    for task in TASKS:
        subparsers.add_parser(task, parents=[common], help=helps[task])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    load_dotenv()
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed: must be a nonnegative integer")
        if args.tolerance is not None and args.tolerance < 0:
            raise ConfigError("--tolerance: must be nonnegative")
        config = load_config(args.config)
        runner = ExperimentRunner(config, seed=args.seed, tolerance=args.tolerance)
        result = runner.run(args.task)
        out_dir = args.out or config.output
        artifacts = write_artifacts(out_dir, result.tables, result.documents)
    except (ConfigError, InvalidInputError) as e:
        logger.error(f"Configuration error: {e}")
        return ExitCodes.CONFIG_ERROR
    except ResourceLimitError as e:
        logger.error(f"Resource limit exceeded: {e}")
        return ExitCodes.RESOURCE_LIMIT
    except NumericalDegeneracyError as e:
        logger.error(f"Numerical degeneracy: {e}")
        return ExitCodes.NUMERICAL_DEGENERACY
    except InductionError as e:
        logger.error(f"Run failed: {e}")
        return ExitCodes.FAILURE

    print(generate_run_summary(args.task, result.summary, artifacts))
    return ExitCodes.OK


if __name__ == "__main__":
    sys.exit(main())
