"""Concrete syntax, AST, desugaring and typechecking."""
from .desugar import desugar
from .parser import RaspSyntaxError, parse
from .syntax import Dialect, IoConvention, Program, pretty
from .typecheck import RaspTypeError, SemType, TypedProgram, typecheck

__all__ = ["parse", "pretty", "desugar", "typecheck", "Program", "TypedProgram",
           "SemType", "Dialect", "IoConvention", "RaspSyntaxError", "RaspTypeError"]
