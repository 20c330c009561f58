"""Reference evaluator producing full traces under all three I/O conventions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .lang.syntax import (
    PAD, And, Apply, Arith, BoolLit, Compare, Concat, Cond, Contains, Dead,
    IoConvention, LastIndex, NatLit, Not, Or, PositionWise, PrefixSum, Program, Read,
    SymLit,
)
from .lang.typecheck import TypedProgram, typecheck
from .minlen import compile_minlen


class VectorLengthError(ValueError):
    pass


class MalformedOutput(ValueError):
    pass


class MissingTableEntry(KeyError):
    pass


def as_symbols(w: Union[str, Sequence[str]]) -> tuple:
    return tuple(w) if isinstance(w, str) else tuple(w)


@dataclass(frozen=True)
class IoInstance:
    raw_input: tuple
    n: int
    convention: IoConvention

    @classmethod
    def make(cls, tp: TypedProgram, w, n: Optional[int] = None, strict: bool = True):
        p = tp.program
        w = as_symbols(w)
        bad = [a for a in w if a not in p.sigma]
        if bad:
            raise ValueError(f"symbol {bad[0]!r} not in the input alphabet")
        q = minimum_length(p, len(w))
        if n is None:
            n = q + 1 if p.io is IoConvention.PADDED else len(w)
        if p.io is IoConvention.PADDED:
            if n <= len(w):
                raise VectorLengthError(f"padded input of length {len(w)} needs n > {len(w)}")
            if strict and n <= q:
                raise VectorLengthError(f"n={n} does not exceed the minimum vector length q({len(w)})={q}")
        elif n != len(w):
            raise VectorLengthError(f"n must equal |w|={len(w)} under {p.io.value} io")
        return cls(w, n, p.io)

    def vector(self) -> tuple:
        if self.convention is IoConvention.PADDED:
            return self.raw_input + (PAD,) * (self.n - len(self.raw_input))
        return self.raw_input


def minimum_length(p: Program, ell: int) -> int:
    if p.io is not IoConvention.PADDED:
        return ell
    if p.minlen is None:
        return ell
    return max(ell, compile_minlen(p.minlen)(ell))


@dataclass
class Trace:
    n: int
    rows: dict
    default_taken: set = field(default_factory=set)
    types: dict = field(default_factory=dict)

    def row(self, name: str) -> list:
        return self.rows[name]


def _clip(v: int, n: int) -> int:
    return 0 if v < 0 else (n - 1 if v > n - 1 else v)


class _Compiler:
    """Turns expressions into closures ``f(i, j)`` over the rows computed so far."""

    def __init__(self, rows, tables, n):
        self.rows, self.tables, self.n = rows, tables, n

    def c(self, e, dead=None):
        n = self.n
        if isinstance(e, BoolLit):
            v = e.value
            return lambda i, j: v
        if isinstance(e, SymLit):
            v = e.value
            return lambda i, j: v
        if isinstance(e, NatLit):
            v = _clip(e.value, n)
            return lambda i, j: v
        if isinstance(e, LastIndex):
            return lambda i, j: n - 1
        if isinstance(e, Dead):
            return lambda i, j: dead
        if isinstance(e, Read):
            row = self.rows[e.name]
            if e.var == "i":
                return lambda i, j: row[i]
            return lambda i, j: row[j]
        if isinstance(e, Not):
            a = self.c(e.arg)
            return lambda i, j: not a(i, j)
        if isinstance(e, And):
            a, b = self.c(e.left), self.c(e.right)
            return lambda i, j: a(i, j) and b(i, j)
        if isinstance(e, Or):
            a, b = self.c(e.left), self.c(e.right)
            return lambda i, j: a(i, j) or b(i, j)
        if isinstance(e, Compare):
            a, b = self.c(e.left), self.c(e.right)
            op = _CMP[e.op]
            return lambda i, j: op(a(i, j), b(i, j))
        if isinstance(e, Arith):
            a, b = self.c(e.left), self.c(e.right)
            if e.op == "+":
                return lambda i, j: _clip(a(i, j) + b(i, j), n)
            return lambda i, j: _clip(a(i, j) - b(i, j), n)
        if isinstance(e, Cond):
            t, c, o = self.c(e.then, dead), self.c(e.cond), self.c(e.other, dead)
            return lambda i, j: t(i, j) if c(i, j) else o(i, j)
        if isinstance(e, Contains):
            a, s = self.c(e.arg), e.sym
            return lambda i, j: s in a(i, j)
        if isinstance(e, Concat):
            a, b = self.c(e.left), self.c(e.right)
            return lambda i, j: a(i, j) + b(i, j)
        if isinstance(e, Apply):
            table = self.tables[e.table]
            args = [self.c(a) for a in e.args]
            name = e.table

            def apply(i, j):
                key = tuple(a(i, j) for a in args)
                try:
                    return table[key]
                except KeyError:
                    raise MissingTableEntry(f"table {name} has no entry for {key!r}") from None
            return apply
        raise TypeError(f"cannot evaluate {e!r}")


_CMP = {"=": lambda a, b: a == b, "!=": lambda a, b: a != b, "<": lambda a, b: a < b,
        "<=": lambda a, b: a <= b, ">": lambda a, b: a > b, ">=": lambda a, b: a >= b}


def _mask_range(mask: str, i: int, n: int):
    if mask == "true":
        return range(n)
    if mask == "j<i":
        return range(i)
    if mask == "j<=i":
        return range(i + 1)
    if mask == "j>i":
        return range(i + 1, n)
    return range(i, n)


def eval_expr(e, rows: dict, tables: dict, n: int, i: int = 0, j: int = 0, dead=None):
    """Evaluate one expression at a given (i, j); used by backends for finite tables."""
    return _Compiler(rows, tables, n).c(e, dead)(i, j)


def eval(tp: TypedProgram, io: IoInstance) -> Trace:  # noqa: A001 - mirrors the op name
    """Run every definition in order and return the full trace."""
    p = tp.program
    n = io.n
    vec = io.vector()
    if len(vec) != n:
        raise VectorLengthError(f"input vector has length {len(vec)}, expected {n}")
    rows: dict = {"in": list(vec)}
    if p.dialect.rank >= 1:
        rows["pos"] = list(range(n))
    tables = {t.name: t.as_dict() for t in p.tables}
    comp = _Compiler(rows, tables, n)
    taken = set()
    for d in p.defs:
        rhs = d.rhs
        if isinstance(rhs, PositionWise):
            f = comp.c(rhs.expr)
            rows[d.name] = [f(i, 0) for i in range(n)]
        elif isinstance(rhs, PrefixSum):
            f = comp.c(rhs.value)
            out, acc = [], 0
            for j in range(n):
                acc += f(0, j)
                out.append(min(acc, n - 1))
            rows[d.name] = out
        else:
            dead = tp.types[d.name].dead
            score = comp.c(rhs.score)
            value = comp.c(rhs.value)
            default = comp.c(rhs.default, dead)
            out = []
            for i in range(n):
                js = _mask_range(rhs.mask, i, n)
                if rhs.choice == "rightmost":
                    js = reversed(js)
                for j in js:
                    if score(i, j):
                        out.append(value(i, j))
                        break
                else:
                    out.append(default(i, 0))
                    taken.add((d.name, i))
            rows[d.name] = out
    return Trace(n, rows, taken, dict(tp.types))


def extract_output(p: Program, out_row: Sequence) -> str:
    gamma = set(p.gamma)
    if p.io is IoConvention.PADDED:
        vals = list(out_row)
        k = vals.index(PAD) if PAD in vals else len(vals)
        if any(v != PAD for v in vals[k:]):
            raise MalformedOutput(f"non-pad symbol after the first pad at position {k}")
        vals = vals[:k]
    elif p.io is IoConvention.PACKED:
        vals = [c for v in out_row for c in v]
        if any(len(v) > p.k for v in out_row):
            raise MalformedOutput(f"packed cell longer than k={p.k}")
    else:
        vals = list(out_row)
    stray = [v for v in vals if v not in gamma]
    if stray:
        raise MalformedOutput(f"output symbol {stray[0]!r} is not in the output alphabet")
    return "".join(vals)


def run(tp: Union[TypedProgram, Program], w, n: Optional[int] = None, strict: bool = True) -> str:
    """Evaluate on ``w`` and extract the output string."""
    if isinstance(tp, Program):
        tp = typecheck(tp)
    io = IoInstance.make(tp, w, n, strict)
    return extract_output(tp.program, eval(tp, io).rows["out"])


def trace(tp: Union[TypedProgram, Program], w, n: Optional[int] = None, strict: bool = True) -> Trace:
    if isinstance(tp, Program):
        tp = typecheck(tp)
    return eval(tp, IoInstance.make(tp, w, n, strict))


# ------------------------------------------------------------------ rendering

def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if v == "":
        return "ε"
    return v


def render_trace(t: Trace, fmt: str = "tsv", show_fresh: bool = False) -> str:
    """One row per vector, one column per position. Booleans print as 0/1."""
    names = [k for k in t.rows if show_fresh or "$" not in k]
    cells = {k: [_cell(v) for v in t.rows[k]] for k in names}
    if fmt == "tsv":
        return "".join("\t".join([k] + cells[k]) + "\n" for k in names)
    if fmt == "markdown":
        head = "| vector | " + " | ".join(str(i) for i in range(t.n)) + " |\n"
        sep = "|---|" + "---|" * t.n + "\n"
        body = "".join("| " + k + " | " + " | ".join(_md(c) for c in cells[k]) + " |\n"
                       for k in names)
        return head + sep + body
    raise ValueError(f"unknown format {fmt!r}")


def _md(c: str) -> str:
    return c.replace("|", "\\|")
