"""Bundled kernel corpus, scalar oracles and the compile-and-run harness."""
