"""Dialect-aware typechecking with precise finite-domain inference."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional

from .desugar import desugar
from .syntax import (
    PAD, And, Apply, Arith, BoolLit, Compare, Concat, Cond, Contains, Dead,
    Dialect, IoConvention, LastIndex, NatLit, Not, Or, PositionWise, PrefixSum,
    Program, Read, SymLit, free_vars, predefined,
)

UNDEFINED = "undefined vector"
FREE_VAR = "free-variable violation"
CROSS_ORDER = "cross-position order comparison"
DIALECT = "dialect feature violation"
COND_ARMS = "ill-typed conditional arms"
MISMATCH = "type mismatch"
OUTPUT = "bad output vector"


class RaspTypeError(Exception):
    def __init__(self, def_name: str, reason: str, detail: str = ""):
        super().__init__(f"{def_name}: {reason}" + (f" ({detail})" if detail else ""))
        self.def_name, self.reason, self.detail = def_name, reason, detail


@dataclass(frozen=True)
class SemType:
    kind: str  # bool | nat | sym
    domain: frozenset = frozenset()

    def __str__(self):
        if self.kind != "sym":
            return self.kind.capitalize()
        return "Sym{" + ",".join(repr(s) for s in sorted(self.domain)) + "}"

    @property
    def dead(self):
        if self.kind == "bool":
            return False
        if self.kind == "nat":
            return 0
        return min(self.domain) if self.domain else ""


BOOL = SemType("bool")
NAT = SemType("nat")


def sym(values) -> SemType:
    return SemType("sym", frozenset(values))


@dataclass
class TypedProgram:
    program: Program
    types: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def dialect(self):
        return self.program.dialect

    def type_of(self, name: str) -> SemType:
        return self.types[name]

    def input_type(self) -> SemType:
        return self.types["in"]


class _Checker:
    def __init__(self, p: Program):
        self.p = p
        self.tables = {t.name: t for t in p.tables}
        self.env: dict = {}
        in_dom = set(p.sigma)
        if p.io is IoConvention.PADDED:
            in_dom.add(PAD)
        self.env["in"] = sym(in_dom)
        if p.dialect.rank >= 1:
            self.env["pos"] = NAT
        self.cur = ""
        self.warnings: list = []

    def fail(self, reason, detail=""):
        raise RaspTypeError(self.cur, reason, detail)

    def need_nat(self, what):
        if self.p.dialect is Dialect.BRASP:
            self.fail(DIALECT, f"{what} requires integer support")

    def infer(self, e, allowed: set, ctx: Optional[SemType] = None) -> SemType:
        if isinstance(e, BoolLit):
            return BOOL
        if isinstance(e, SymLit):
            return sym({e.value})
        if isinstance(e, NatLit):
            self.need_nat("integer literal")
            return NAT
        if isinstance(e, LastIndex):
            self.need_nat("n-1")
            return NAT
        if isinstance(e, Dead):
            if ctx is None:
                self.fail(MISMATCH, "'dead' is only allowed as a default")
            return ctx
        if isinstance(e, Read):
            if e.var not in allowed:
                self.fail(FREE_VAR, f"{e.name}({e.var}) not allowed here")
            if e.name == "pos" and self.p.dialect is Dialect.BRASP:
                self.fail(DIALECT, "pos is not available in brasp")
            if e.name not in self.env:
                self.fail(UNDEFINED, e.name)
            return self.env[e.name]
        if isinstance(e, Not):
            self.expect(e.arg, allowed, "bool")
            return BOOL
        if isinstance(e, (And, Or)):
            self.expect(e.left, allowed, "bool")
            self.expect(e.right, allowed, "bool")
            return BOOL
        if isinstance(e, Compare):
            lt = self.infer(e.left, allowed)
            rt = self.infer(e.right, allowed)
            if lt.kind != rt.kind:
                self.fail(MISMATCH, f"cannot compare {lt} with {rt}")
            if lt.kind == "nat":
                self.need_nat("integer comparison")
                if len(free_vars(e)) > 1:
                    if e.op != "=":
                        self.fail(CROSS_ORDER, f"'{e.op}' between i and j")
                    if not _is_cross_eq(e):
                        self.fail(CROSS_ORDER, "integer equality across positions must read V1(i) = V2(j)")
            elif e.op not in ("=", "!="):
                self.fail(MISMATCH, f"'{e.op}' needs integer operands")
            return BOOL
        if isinstance(e, Arith):
            self.need_nat("arithmetic")
            self.expect(e.left, allowed, "nat")
            self.expect(e.right, allowed, "nat")
            return NAT
        if isinstance(e, Cond):
            self.expect(e.cond, allowed, "bool")
            a = self.infer(e.then, allowed, ctx)
            b = self.infer(e.other, allowed, ctx)
            if a.kind != b.kind:
                self.fail(COND_ARMS, f"{a} vs {b}")
            return sym(a.domain | b.domain) if a.kind == "sym" else a
        if isinstance(e, Contains):
            self.expect(e.arg, allowed, "sym")
            return BOOL
        if isinstance(e, Concat):
            a = self.expect(e.left, allowed, "sym")
            b = self.expect(e.right, allowed, "sym")
            return sym(x + y for x in a.domain for y in b.domain)
        if isinstance(e, Apply):
            t = self.tables.get(e.table)
            if t is None:
                self.fail(UNDEFINED, f"table {e.table}")
            doms = [self.expect(a, allowed, "sym").domain for a in e.args]
            table = t.as_dict()
            image = {table[k] for k in product(*doms) if k in table}
            return sym(image)
        self.fail(MISMATCH, f"unknown expression {e!r}")

    def expect(self, e, allowed, kind) -> SemType:
        t = self.infer(e, allowed)
        if t.kind != kind:
            self.fail(MISMATCH, f"expected {kind}, got {t}")
        return t

    def check_def(self, d):
        self.cur = d.name
        rhs = d.rhs
        if isinstance(rhs, PositionWise):
            t = self.infer(rhs.expr, {"i"})
        elif isinstance(rhs, PrefixSum):
            if self.p.dialect is not Dialect.SRASP:
                self.fail(DIALECT, "prefix sums need srasp")
            t = self.expect(rhs.value, {"j"}, "nat")
        else:
            self.expect(rhs.score, {"i", "j"}, "bool")
            vt = self.infer(rhs.value, {"j"})
            dt = self.infer(rhs.default, {"i"}, vt)
            if vt.kind != dt.kind:
                self.fail(MISMATCH, f"value {vt} vs default {dt}")
            t = sym(vt.domain | dt.domain) if vt.kind == "sym" else vt
        self.env[d.name] = t

    def check_output(self):
        p = self.p
        self.cur = "out"
        if "out" not in self.env:
            self.fail(OUTPUT, "no definition of out")
        t = self.env["out"]
        if t.kind != "sym":
            self.fail(OUTPUT, f"out has type {t}")
        gamma = set(p.gamma)
        if p.io is IoConvention.LENGTH:
            bad = t.domain - gamma
        elif p.io is IoConvention.PADDED:
            bad = t.domain - gamma - {PAD}
        else:
            bad = {s for s in t.domain if len(s) > p.k or any(c not in gamma for c in s)}
        if bad:
            # inferred domains over-approximate, so this is checked again at run time
            self.warnings.append("out may hold values outside the output alphabet: "
                                 + ", ".join(repr(s) for s in sorted(bad)))

    def check_io(self):
        p = self.p
        self.cur = "<header>"
        if p.dialect is Dialect.SRASP and p.io is not IoConvention.PADDED:
            self.fail(DIALECT, "srasp programs use padded io")
        if p.dialect is not Dialect.SRASP and p.io is IoConvention.PADDED:
            self.fail(DIALECT, "padded io needs srasp")
        if p.minlen is not None and p.io is not IoConvention.PADDED:
            self.fail(DIALECT, "minlen applies to padded io only")
        if PAD in p.sigma and p.io is IoConvention.PADDED:
            self.fail(MISMATCH, "the pad symbol cannot be an input symbol")


def _is_cross_eq(e: Compare) -> bool:
    l, r = e.left, e.right
    return (isinstance(l, Read) and isinstance(r, Read)
            and {l.var, r.var} == {"i", "j"})


def typecheck(p: Program) -> TypedProgram:
    """Desugar (if needed) and typecheck; raises RaspTypeError."""
    p = desugar(p)
    c = _Checker(p)
    c.check_io()
    for d in p.defs:
        if d.name in predefined(p.dialect):
            raise RaspTypeError(d.name, MISMATCH, "redefinition of a predefined vector")
        c.check_def(d)
    c.check_output()
    return TypedProgram(p, dict(c.env), c.warnings)


def infer_types(p: Program) -> dict:
    """Types of every vector of a possibly incomplete program (no output checks)."""
    p = desugar(p)
    c = _Checker(p)
    for d in p.defs:
        c.check_def(d)
    return dict(c.env)
