from __future__ import annotations

import asyncio
import logging

from corpus.harness import build_kernel
from regionir.printer import format_module

logger = logging.getLogger(__name__)


class CompileCommandsMixin:
    async def compile_kernel(self, args) -> int:
        """Compile one kernel source file to assembly."""
        level = f"O{args.opt}" if args.opt is not None else self.config.opt_level
        source = self.read_text(args.source)
        dumps = []

        def on_print(name, module):
            dumps.append((f"after {name}", format_module(module)))

        build = await asyncio.to_thread(
            build_kernel, source, str(args.source), level, args.print_after, on_print if args.print_after else None
        )
        text = build.program.text()
        if args.output is not None:
            args.output.write_text(text, encoding="utf-8")
            logger.info(f"Wrote {args.output} ({build.program.count()} instructions)")

        stats = list(build.opt_stats.lines()) + list(build.result.stats_lines())
        if args.json:
            payload = {
                "kernel": build.name,
                "level": level,
                "instructions": build.program.count(),
                "grf_used": build.program.grf_used,
                "stats": {key: int(value) for key, value in (line.split("=", 1) for line in stats)},
            }
            if args.dump_ir:
                payload["ir"] = {"lowered": format_module(build.lowered), "optimized": format_module(build.optimized)}
            if dumps:
                payload["print_after"] = [body for _, body in dumps]
            if args.output is None or args.dump_asm:
                payload["asm"] = text
            self.send_json(payload)
            return 0

        if args.dump_ir:
            self.send_message(f"// region IR, lowered\n{format_module(build.lowered)}")
            self.send_message(f"// region IR, {level}\n{format_module(build.optimized)}")
        for title, body in dumps:
            self.send_message(f"// region IR, {title}\n{body}")
        if args.output is None or args.dump_asm:
            self.send_message(text)
        if args.stats:
            self.send_message("\n".join(stats))
        return 0
