"""
Bit-exact thread emulator for emitted programs.

Submodules are imported directly (``emulator.dispatch``, ``emulator.memory``);
the region-IR evaluator shares ``emulator.memory`` and must not pull in the
backend through this package.
"""
