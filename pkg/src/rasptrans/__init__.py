"""Toolkit for the B-RASP / B-RASP[pos] / S-RASP dialect ladder."""
from .interp import eval, render_trace, run, trace
from .lang import desugar, parse, pretty, typecheck

__all__ = ["parse", "pretty", "desugar", "typecheck", "eval", "run", "trace", "render_trace"]
