from frontend.interp import interpret
from frontend.lower import lower
from frontend.parser import parse
from frontend.typecheck import CheckedKernel, typecheck
from frontend.unparse import unparse


def compile_source(source: str, file: str = "<input>"):
    """Parse, check and lower kernel source; returns the region-IR module."""
    return lower(typecheck(parse(source, file), file))


__all__ = ["CheckedKernel", "compile_source", "interpret", "lower", "parse", "typecheck", "unparse"]
