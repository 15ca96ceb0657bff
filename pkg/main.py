#!/usr/bin/env python3
"""
cmsimd - explicit-SIMD kernel compiler and GPU thread emulator
"""

import argparse
import asyncio
import logging
import logging.handlers
import sys
from pathlib import Path

from cli_commands import CommandHandler
from config import Config
from optimizer.pipeline import PASS_ORDER

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def _configure_logging(config: Config):
    # stdout carries command output, so log records go to stderr
    handlers = [logging.StreamHandler(sys.stderr)]
    if config.log_file is not None:
        handlers.append(
            logging.handlers.RotatingFileHandler(
                config.log_file, maxBytes=10 * 1024 * 1024, backupCount=3
            )
        )
    logging.basicConfig(level=config.log_level, format=LOG_FORMAT, handlers=handlers, force=True)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmsimd", description="Explicit-SIMD kernel compiler and GPU thread emulator")
    parser.add_argument(
        "--config",
        "-c",
        type=Path,
        default=None,
        metavar="FILE",
        help="Path to .env-format config file (values override environment variables)",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    compile_p = sub.add_parser("compile", help="Compile a .cmk kernel to vISA assembly")
    compile_p.add_argument("source", type=Path, help="Kernel source file")
    compile_p.add_argument("-O", dest="opt", choices=["0", "2"], default=None, help="Optimization level (-O0 or -O2)")
    compile_p.add_argument("-o", dest="output", type=Path, default=None, metavar="FILE", help="Write assembly to FILE")
    compile_p.add_argument("--dump-ir", action="store_true", help="Print the region IR before and after optimization")
    compile_p.add_argument("--dump-asm", action="store_true", help="Print the assembly even when writing it to a file")
    compile_p.add_argument("--print-after", choices=PASS_ORDER, default=None, metavar="PASS", help="Print the IR after every run of PASS")
    compile_p.add_argument("--stats", action="store_true", help="Print pass and backend statistics")
    compile_p.add_argument("--json", action="store_true", help="Print a JSON report instead of text")

    run_p = sub.add_parser("run", help="Run a .visa program over a thread grid")
    run_p.add_argument("program", type=Path, help="Assembly file produced by compile")
    run_p.add_argument("--surface", action="append", default=[], metavar="NAME=PATH:GEOM:KIND", help="Bind a surface (repeatable)")
    run_p.add_argument("--grid", default="1x1", metavar="WxH", help="Thread grid (default 1x1)")
    run_p.add_argument("--arg", action="append", default=[], metavar="NAME=VALUE", help="Scalar kernel argument (repeatable)")
    run_p.add_argument("--json", action="store_true", help="Print a JSON report instead of text")

    test_p = sub.add_parser("test", help="Compile and check the kernel corpus against its oracles")
    test_p.add_argument("cases", nargs="*", help="Case names (default: all)")
    test_p.add_argument("--differential", action="store_true", help="Also compare against the region-IR evaluator on many seeds")
    test_p.add_argument("--seeds", type=int, default=None, help="Inputs per case (default 1, or CMSIMD_TEST_SEEDS with --differential)")
    test_p.add_argument("--corpus", type=Path, default=None, metavar="DIR", help="Kernel directory (default CMSIMD_CORPUS_DIR)")
    test_p.add_argument("--json", action="store_true", help="Print a JSON report instead of text")
    return parser


def _parse_args(argv=None):
    return _build_parser().parse_args(argv)


async def main(argv=None) -> int:
    """Main entry point; returns the process exit status."""
    args = _parse_args(argv)
    try:
        config = Config(config_path=args.config)
    except ValueError as e:
        print(f"cmsimd: configuration error: {e}", file=sys.stderr)
        return 2
    _configure_logging(config)
    logger.debug(f"Starting cmsimd {args.command}")

    handler = CommandHandler(config)
    return await handler.handle_command(args.command, args)


def run():
    """Entry point for the cmsimd console script."""
    try:
        sys.exit(asyncio.run(main()))
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(130)


if __name__ == "__main__":
    run()
