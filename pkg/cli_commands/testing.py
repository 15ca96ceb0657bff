from __future__ import annotations

import asyncio
import logging

from corpus.cases import CASES, get_case
from corpus.harness import CaseReport, check_case

from .base import UsageError

logger = logging.getLogger(__name__)


class CorpusCommandsMixin:
    async def test_corpus(self, args) -> int:
        """Run corpus cases concurrently and report byte-exact verdicts."""
        try:
            cases = [get_case(name) for name in args.cases] if args.cases else list(CASES)
        except KeyError as e:
            raise UsageError(e.args[0]) from None
        corpus_dir = args.corpus or self.config.corpus_dir
        if args.seeds is not None:
            seeds = args.seeds
        else:
            seeds = self.config.test_seeds if args.differential else 1
        if seeds < 1:
            raise UsageError("--seeds must be at least 1")

        semaphore = asyncio.Semaphore(self.config.jobs)

        async def check(case) -> CaseReport:
            async with semaphore:
                try:
                    return await asyncio.to_thread(check_case, case, corpus_dir, seeds, args.differential)
                except Exception as e:
                    logger.debug(f"Corpus case {case.name} raised", exc_info=True)
                    return CaseReport(case.name, passed=False, failure=f"{type(e).__name__}: {e}")

        reports = await asyncio.gather(*(check(case) for case in cases))
        failed = [r for r in reports if not r.passed]
        logger.info(f"Corpus: {len(reports) - len(failed)}/{len(reports)} cases passed")

        if args.json:
            self.send_json({"passed": not failed, "seeds": seeds, "cases": [r.to_json() for r in reports]})
        else:
            for r in reports:
                if r.passed:
                    counts = " ".join(f"{level}={n}" for level, n in r.instructions.items())
                    self.send_message(f"PASS {r.name:<16} instructions {counts}")
                else:
                    self.send_message(f"FAIL {r.name:<16} {r.failure}")
            self.send_message(f"{len(reports) - len(failed)}/{len(reports)} cases passed")
        return 1 if failed else 0
