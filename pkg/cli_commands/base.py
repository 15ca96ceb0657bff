"""Shared base utilities and state for the split command handlers."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, TextIO, Tuple

from config import Config
from errors import CmsimdError

logger = logging.getLogger(__name__)


class UsageError(CmsimdError):
    """A malformed command-line value."""


class CommandHandlerBase:
    """Holds configuration and output streams for every command."""

    # Command abbreviations
    COMMAND_ALIASES = {
        "c": "compile",
        "cc": "compile",
        "build": "compile",
        "r": "run",
        "exec": "run",
        "t": "test",
        "check": "test",
    }

    def __init__(self, config: Config, out: TextIO = None, err: TextIO = None):
        self.config = config
        self.out = out or sys.stdout
        self.err = err or sys.stderr

    @staticmethod
    def normalize_command(cmd: str) -> str:
        """Convert command abbreviations to full names."""
        return CommandHandlerBase.COMMAND_ALIASES.get(cmd.lower(), cmd.lower())

    def send_message(self, message: str):
        """Write command output to stdout."""
        print(message, file=self.out)

    def send_json(self, payload: Dict[str, Any]):
        print(json.dumps(payload, indent=2, sort_keys=True), file=self.out)

    def send_error(self, message: str):
        print(message, file=self.err)

    @staticmethod
    def parse_grid(text: str) -> Tuple[int, int]:
        w, sep, h = text.lower().partition("x")
        try:
            grid = (int(w), int(h)) if sep else (int(w), 1)
        except ValueError:
            raise UsageError(f"grid '{text}' must look like WxH") from None
        if grid[0] < 1 or grid[1] < 1:
            raise UsageError(f"grid '{text}' is empty")
        return grid

    @staticmethod
    def parse_kernel_args(items: List[str]) -> Dict[str, object]:
        """``name=value`` pairs; values are ints (any base) or floats."""
        args: Dict[str, object] = {}
        for item in items:
            name, sep, raw = item.partition("=")
            if not sep or not name:
                raise UsageError(f"kernel argument '{item}' must look like name=value")
            try:
                value: object = int(raw, 0)
            except ValueError:
                try:
                    value = float(raw)
                except ValueError:
                    raise UsageError(f"kernel argument '{name}': '{raw}' is not a number") from None
            args[name.strip()] = value
        return args

    @staticmethod
    def read_text(path: Path) -> str:
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise UsageError(f"cannot read {path}: {e.strerror or e}") from None
