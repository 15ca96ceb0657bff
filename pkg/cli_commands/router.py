from __future__ import annotations

import logging

from errors import CmsimdError

logger = logging.getLogger(__name__)


class CommandRouterMixin:
    async def handle_command(self, command: str, args) -> int:
        """Route a parsed command line to its handler and map failures to exit codes."""
        try:
            command = self.normalize_command(command)
            logger.info(f"Command: '{command}'")

            # Route to appropriate handler
            if command == "compile":
                return await self.compile_kernel(args)
            elif command == "run":
                return await self.run_program(args)
            elif command == "test":
                return await self.test_corpus(args)
            else:
                self.send_error(f"Unknown command: {command}")
                return 2
        except CmsimdError as e:
            logger.info(f"Command '{command}' failed: {type(e).__name__}")
            self.send_error(str(e))
            return 1
        except Exception as e:
            logger.error(f"Error handling command '{command}': {e}", exc_info=True)
            self.send_error(f"internal error: {e}")
            return 2
