from __future__ import annotations

from .base import CommandHandlerBase
from .router import CommandRouterMixin
from .compile import CompileCommandsMixin
from .run import RunCommandsMixin
from .testing import CorpusCommandsMixin


class CommandHandler(CommandRouterMixin, CompileCommandsMixin, RunCommandsMixin, CorpusCommandsMixin, CommandHandlerBase):
    pass
