from __future__ import annotations

import asyncio
import logging

from backend.asm import parse_visa
from emulator.dispatch import DispatchSpec, dispatch
from emulator.surfaces import load_surface, parse_binding, save_surface

logger = logging.getLogger(__name__)


class RunCommandsMixin:
    async def run_program(self, args) -> int:
        """Dispatch an assembled program and write back the surfaces it changed."""
        program = parse_visa(self.read_text(args.program), str(args.program))
        grid = self.parse_grid(args.grid)
        kernel_args = self.parse_kernel_args(args.arg)

        surfaces, paths, before = {}, {}, {}
        for binding in args.surface:
            name, path, dims, kind = parse_binding(binding)
            surface = load_surface(name, path, dims, kind, must_exist=False)
            surfaces[name], paths[name] = surface, path
            before[name] = surface.tobytes() if path.exists() else None

        surfaces, stats = await asyncio.to_thread(dispatch, program, DispatchSpec(grid, surfaces, kernel_args))

        written = []
        for name, surface in surfaces.items():
            if before[name] is None or before[name] != surface.tobytes():
                save_surface(surface, paths[name])
                written.append(name)
        logger.info(f"Ran {program.name} on a {grid[0]}x{grid[1]} grid; wrote {', '.join(written) or 'nothing'}")

        if args.json:
            self.send_json(
                {
                    "kernel": program.name,
                    "grid": list(grid),
                    "written": written,
                    "stats": dict(stats.counters),
                }
            )
        else:
            self.send_message("\n".join(stats.lines()))
        return 0
