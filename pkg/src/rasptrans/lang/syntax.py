"""AST for the RASP dialect ladder and its pretty-printer.

Expressions are frozen dataclasses so programs hash and compare structurally.
Arithmetic nodes are always binary; the printer parenthesizes every nested
arithmetic operand, so ``parse(pretty(p)) == p`` holds.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, Optional, Union

PAD = "_"
END = "⊣"


class Dialect(str, Enum):
    BRASP = "brasp"
    BRASP_POS = "brasp_pos"
    SRASP = "srasp"

    @property
    def rank(self) -> int:
        return {"brasp": 0, "brasp_pos": 1, "srasp": 2}[self.value]


class IoConvention(str, Enum):
    LENGTH = "length"
    PACKED = "packed"
    PADDED = "padded"


# --------------------------------------------------------------- expressions

@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class SymLit:
    value: str


@dataclass(frozen=True)
class NatLit:
    value: int


@dataclass(frozen=True)
class LastIndex:
    """The constant n-1."""


@dataclass(frozen=True)
class Dead:
    """Placeholder default; evaluates to the per-type dead value."""


@dataclass(frozen=True)
class Read:
    name: str
    var: str  # "i" or "j"


@dataclass(frozen=True)
class Lookup:
    """Sugar ``v(e(i))``: read vector ``name`` at position ``index``."""
    name: str
    index: "Expr"


@dataclass(frozen=True)
class Neighbor:
    """Sugar ``v(i-1)`` / ``v(i+1)`` (offset may be any nonzero int)."""
    name: str
    offset: int


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str  # one of = != < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Arith:
    op: str  # + or -
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Cond:
    then: "Expr"
    cond: "Expr"
    other: "Expr"


@dataclass(frozen=True)
class Apply:
    table: str
    args: tuple


@dataclass(frozen=True)
class Concat:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Contains:
    """``'x' in e``: does the string value of ``e`` contain symbol ``x``."""
    sym: str
    arg: "Expr"


Expr = Union[BoolLit, SymLit, NatLit, LastIndex, Dead, Read, Lookup, Neighbor,
             Not, And, Or, Compare, Arith, Cond, Apply, Concat, Contains]

MASKS = ("true", "j<i", "j<=i", "j>i", "j>=i")


# ------------------------------------------------------------- definitions

@dataclass(frozen=True)
class PositionWise:
    expr: Expr


@dataclass(frozen=True)
class Attention:
    choice: str  # leftmost | rightmost
    mask: str    # one of MASKS
    score: Expr
    value: Expr
    default: Expr = Dead()
    implicit_default: bool = True


@dataclass(frozen=True)
class PrefixSum:
    value: Expr


Rhs = Union[PositionWise, Attention, PrefixSum]


@dataclass(frozen=True)
class Def:
    name: str
    rhs: Rhs


@dataclass(frozen=True)
class Table:
    name: str
    arity: int
    entries: tuple  # of (args tuple, result str)

    def as_dict(self) -> dict:
        return dict(self.entries)


@dataclass(frozen=True)
class Program:
    dialect: Dialect
    io: IoConvention
    sigma: tuple
    gamma: tuple
    defs: tuple
    k: int = 1
    minlen: Optional[str] = None
    tables: tuple = ()
    name: str = ""

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def def_names(self) -> list:
        return [d.name for d in self.defs]

    def get(self, name: str) -> Def:
        for d in self.defs:
            if d.name == name:
                return d
        raise KeyError(name)

    def replace(self, **kw) -> "Program":
        return replace(self, **kw)


def predefined(dialect: Dialect) -> tuple:
    return ("in", "pos") if dialect.rank >= 1 else ("in",)


# ------------------------------------------------------------------ helpers

def children(e: Expr) -> Iterator[Expr]:
    if isinstance(e, (Not,)):
        yield e.arg
    elif isinstance(e, (And, Or, Compare, Arith, Concat)):
        yield e.left
        yield e.right
    elif isinstance(e, Cond):
        yield e.then
        yield e.cond
        yield e.other
    elif isinstance(e, Apply):
        yield from e.args
    elif isinstance(e, Contains):
        yield e.arg
    elif isinstance(e, Lookup):
        yield e.index


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from walk(c)


def map_expr(e: Expr, fn) -> Expr:
    """Bottom-up rebuild; ``fn`` sees each node after its children."""
    if isinstance(e, Not):
        e = Not(map_expr(e.arg, fn))
    elif isinstance(e, (And, Or, Concat)):
        e = type(e)(map_expr(e.left, fn), map_expr(e.right, fn))
    elif isinstance(e, (Compare, Arith)):
        e = type(e)(e.op, map_expr(e.left, fn), map_expr(e.right, fn))
    elif isinstance(e, Cond):
        e = Cond(map_expr(e.then, fn), map_expr(e.cond, fn), map_expr(e.other, fn))
    elif isinstance(e, Apply):
        e = Apply(e.table, tuple(map_expr(a, fn) for a in e.args))
    elif isinstance(e, Contains):
        e = Contains(e.sym, map_expr(e.arg, fn))
    elif isinstance(e, Lookup):
        e = Lookup(e.name, map_expr(e.index, fn))
    return fn(e)


def free_vars(e: Expr) -> set:
    out = set()
    for node in walk(e):
        if isinstance(node, Read):
            out.add(node.var)
        elif isinstance(node, Neighbor):
            out.add("i")
    return out


def reads(e: Expr) -> set:
    """Vector names referenced by ``e`` (including through sugar)."""
    out = set()
    for node in walk(e):
        if isinstance(node, (Read, Lookup, Neighbor)):
            out.add(node.name)
    return out


def rhs_exprs(rhs: Rhs) -> list:
    if isinstance(rhs, PositionWise):
        return [rhs.expr]
    if isinstance(rhs, PrefixSum):
        return [rhs.value]
    return [rhs.score, rhs.value, rhs.default]


def map_rhs(rhs: Rhs, fn) -> Rhs:
    if isinstance(rhs, PositionWise):
        return PositionWise(fn(rhs.expr))
    if isinstance(rhs, PrefixSum):
        return PrefixSum(fn(rhs.value))
    return replace(rhs, score=fn(rhs.score), value=fn(rhs.value), default=fn(rhs.default))


def rename_reads(e: Expr, mapping: dict) -> Expr:
    def fn(node):
        if isinstance(node, Read) and node.name in mapping:
            return Read(mapping[node.name], node.var)
        if isinstance(node, Lookup) and node.name in mapping:
            return Lookup(mapping[node.name], node.index)
        if isinstance(node, Neighbor) and node.name in mapping:
            return Neighbor(mapping[node.name], node.offset)
        return node
    return map_expr(e, fn)


def rename_tables(e: Expr, mapping: dict) -> Expr:
    def fn(node):
        if isinstance(node, Apply) and node.table in mapping:
            return Apply(mapping[node.table], node.args)
        return node
    return map_expr(e, fn)


# ------------------------------------------------------------------ printer

_PREC = {Cond: 1, Or: 2, And: 3, Not: 4, Compare: 5, Contains: 5, Concat: 6, Arith: 7}


def quote(s: str) -> str:
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def pretty_expr(e: Expr, ctx: int = 0) -> str:
    prec = _PREC.get(type(e), 9)
    if isinstance(e, BoolLit):
        s = "true" if e.value else "false"
    elif isinstance(e, SymLit):
        s = quote(e.value)
    elif isinstance(e, NatLit):
        s = str(e.value)
    elif isinstance(e, LastIndex):
        s = "n-1"
    elif isinstance(e, Dead):
        s = "dead"
    elif isinstance(e, Read):
        s = f"{e.name}({e.var})"
    elif isinstance(e, Lookup):
        s = f"{e.name}({pretty_expr(e.index)})"
    elif isinstance(e, Neighbor):
        sign = "+" if e.offset > 0 else "-"
        s = f"{e.name}(i{sign}{abs(e.offset)})"
    elif isinstance(e, Not):
        s = "not " + pretty_expr(e.arg, prec)
    elif isinstance(e, And):
        s = f"{pretty_expr(e.left, prec)} and {pretty_expr(e.right, prec + 1)}"
    elif isinstance(e, Or):
        s = f"{pretty_expr(e.left, prec)} or {pretty_expr(e.right, prec + 1)}"
    elif isinstance(e, Compare):
        s = f"{pretty_expr(e.left, prec + 1)} {e.op} {pretty_expr(e.right, prec + 1)}"
    elif isinstance(e, Contains):
        s = f"{quote(e.sym)} in {pretty_expr(e.arg, prec + 1)}"
    elif isinstance(e, Concat):
        s = f"{pretty_expr(e.left, prec)} . {pretty_expr(e.right, prec + 1)}"
    elif isinstance(e, Arith):
        # every nested arithmetic operand is parenthesized
        s = f"{pretty_expr(e.left, prec + 1)} {e.op} {pretty_expr(e.right, prec + 1)}"
    elif isinstance(e, Cond):
        s = (f"{pretty_expr(e.then, prec + 1)} if {pretty_expr(e.cond, prec + 1)}"
             f" else {pretty_expr(e.other, prec)}")
    elif isinstance(e, Apply):
        s = f"{e.table}(" + ", ".join(pretty_expr(a) for a in e.args) + ")"
    else:  # pragma: no cover
        raise TypeError(e)
    return f"({s})" if prec < 9 and prec <= ctx and ctx > 0 else s


def pretty_rhs(rhs: Rhs) -> str:
    if isinstance(rhs, PositionWise):
        return pretty_expr(rhs.expr)
    if isinstance(rhs, PrefixSum):
        return f"sum j [j<=i] {pretty_expr(rhs.value)}"
    s = (f"{rhs.choice} j [{rhs.mask}, {pretty_expr(rhs.score)}] "
         f"{pretty_expr(rhs.value, 1)}")
    if not rhs.implicit_default:
        s += f" : {pretty_expr(rhs.default)}"
    return s


def _alpha_sym(a: str) -> str:
    if a and all(c.isalnum() or c in "|_-+*/<>=!@$%^&~.,;:" for c in a):
        return a
    return quote(a)


def pretty(p: Program) -> str:
    lines = []
    if p.name:
        lines.append(f"name: {p.name}")
    lines.append(f"dialect: {p.dialect.value}")
    lines.append("sigma: " + " ".join(_alpha_sym(a) for a in p.sigma))
    lines.append("gamma: " + " ".join(_alpha_sym(a) for a in p.gamma))
    io = p.io.value + (f" {p.k}" if p.io is IoConvention.PACKED else "")
    lines.append(f"io: {io}")
    if p.minlen is not None:
        lines.append(f"minlen: {p.minlen}")
    for t in p.tables:
        body = "; ".join(", ".join(quote(a) for a in args) + " -> " + quote(res)
                         for args, res in t.entries)
        lines.append(f"table {t.name} {{ {body} }}")
    for d in p.defs:
        lines.append(f"{d.name}(i) = {pretty_rhs(d.rhs)};")
    return "\n".join(lines) + "\n"
