"""
The `lab` command line.

    lab <subcommand> [--config path] [--seed N] [--workers K] [--out path]
                     [--backmap coordinate|vvlabel] [--k-mode uniform|fixed]
                     [--decoder name] [--table path] [--tables] [--profile quick|full]

Prints the paths of the written report files on stdout; logs go to stderr.
Exit codes: 0 pass, 1 assertion failure, 2 configuration or usage error,
3 budget exceeded.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

# Add project root to Python path
sys.path.append(os.path.dirname(__file__))
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core import ConfigManager, LabError, get_logger, setup_structured_logging  # noqa: E402
from app.core.exceptions import EXIT_ASSERTION, EXIT_OK, create_error_response  # noqa: E402
from app.services import SUBCOMMANDS, ExperimentService, ReportWriter  # noqa: E402
from app.services.selftest import Profile  # noqa: E402


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Masked Unique-SAT block laboratory")
    parser.add_argument("subcommand", choices=SUBCOMMANDS, help="Experiment to run")
    parser.add_argument("--config", help="YAML or JSON configuration file")
    parser.add_argument("--seed", help="Master seed, decimal or 0x hex")
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.add_argument("--out", help="Output directory for reports")
    parser.add_argument("--backmap", choices=["coordinate", "vvlabel"], help="Back-map convention")
    parser.add_argument("--k-mode", dest="k_mode", choices=["uniform", "fixed"], help="XOR height per trial")
    parser.add_argument("--decoder", help="Registry name of the decoder under test")
    parser.add_argument("--table", help="Plug-in table artifact for the local-table decoder")
    parser.add_argument("--tables", action="store_true", help="Write CSV tables next to the report")
    parser.add_argument(
        "--profile",
        choices=[p.value for p in Profile],
        default=Profile.FULL.value,
        help="Self-test sizes",
    )
    return parser


def cli_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Configuration overrides from CLI flags; unset flags leave the config alone."""
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides.setdefault("output", {})["path"] = args.out
    if args.tables:
        overrides.setdefault("output", {})["tables"] = True
    if args.backmap is not None:
        overrides.setdefault("wrapper", {})["backmap"] = args.backmap
    if args.k_mode is not None:
        overrides.setdefault("ensemble", {})["k_mode"] = args.k_mode
    if args.decoder is not None:
        overrides.setdefault("decoder", {})["name"] = args.decoder
    if args.table is not None:
        overrides.setdefault("decoder", {})["table_path"] = args.table
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    setup_structured_logging(
        environment=os.getenv("LAB_ENVIRONMENT", "development"),
        log_level=os.getenv("LAB_LOG_LEVEL", "INFO"),
    )
    logger = get_logger("main")

    try:
        config = ConfigManager(args.config).load_config(cli_overrides(args))
        logging.getLogger().setLevel(getattr(logging, config.logging.level.upper(), logging.INFO))

        service = ExperimentService(config, profile=args.profile)
        report = service.run(args.subcommand)
        written = ReportWriter(config.output.path).write(
            report, service.last_tables if config.output.tables else None
        )
    except LabError as e:
        exit_code, detail = create_error_response(e.error_code, e.message, e.exit_code, e.details)
        logger.error("Run failed", subcommand=args.subcommand, exit_code=exit_code, **detail.model_dump())
        return exit_code

    for path in written:
        print(path)
    if not report.passed:
        logger.warning(
            "Assertions failed",
            subcommand=args.subcommand,
            failed=[c.name for c in report.failed_checks()],
        )
        return EXIT_ASSERTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
