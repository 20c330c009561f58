"""Compile S-RASP programs to exact average-hard-attention transformers.

Two position encodings are supported. Mode B supplies i/n, (i/n)^2, 1/(i+2)
and the default/zero indicators. Mode C supplies only i/n and 1/(i+2)^2 and
derives everything else with a few extra layers.

Compilation goes through a source-level preparation pass first (see
``prepare``) so that every attention the emitter sees has a future or no
mask, a score that is a disjoint sum of i-guard x j-flag products or a single
integer equality, and plain vector reads as value and default.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Union

from gmpy2 import mpq

from .aha import Attn, Ffn, TransformerSpec
from .interp import eval_expr
from .lang.syntax import (
    PAD, And, Apply, Arith, Attention, BoolLit, Compare, Concat, Cond, Contains, Def,
    Dialect, LastIndex, NatLit, Not, Or, PositionWise, PrefixSum, Program, Read, SymLit,
    children, free_vars, map_expr, rename_reads, walk,
)
from .lang.typecheck import TypedProgram, infer_types, typecheck
from .lower import _literal, _to_var, resolve_dead, simplify

MAX_COMBOS = 200_000


class UnsupportedConstruct(ValueError):
    pass


# =================================================================== preparation

def _is_eq_score(s) -> bool:
    return (isinstance(s, Compare) and s.op == "=" and isinstance(s.left, Read)
            and isinstance(s.right, Read) and {s.left.var, s.right.var} == {"i", "j"})


def _eq_sides(s):
    return (s.left, s.right) if s.left.var == "i" else (s.right, s.left)


def emit_pastmask_lowering(p: Program, types: dict) -> Program:
    """Replace attention over j>i or j>=i by future-masked attention on reversed vectors.

    With r(i) = n-1-i, every vector X read by the definition is reversed by a
    lookup X$R(i) = X(r(i)); the attention runs over j<i (or j<=i) with the
    choice flipped, and the result is reversed back.
    """
    if not any(isinstance(d.rhs, Attention) and d.rhs.mask in ("j>i", "j>=i") for d in p.defs):
        return p
    rev = "pm$rev"
    defs = [Def(rev, PositionWise(Arith("-", LastIndex(), Read("pos", "i"))))]
    made = set()
    for d in p.defs:
        rhs = d.rhs
        if not (isinstance(rhs, Attention) and rhs.mask in ("j>i", "j>=i")):
            defs.append(d)
            continue
        names = sorted({n.name for e in (rhs.score, rhs.value, rhs.default)
                        for n in walk(e) if isinstance(n, Read)})
        mapping = {}
        for x in names:
            r = f"{x}$R"
            mapping[x] = r
            if r not in made:
                made.add(r)
                defs.append(Def(r, _lookup(x, rev, types[x])))
        flipped = "rightmost" if rhs.choice == "leftmost" else "leftmost"
        mask = "j<i" if rhs.mask == "j>i" else "j<=i"
        inner = Attention(flipped, mask, rename_reads(rhs.score, mapping),
                          rename_reads(rhs.value, mapping), rename_reads(rhs.default, mapping), False)
        defs.append(Def(d.name + "$Rv", inner))
        types = dict(types, **{d.name + "$Rv": types[d.name]})
        defs.append(Def(d.name, _lookup(d.name + "$Rv", rev, types[d.name])))
    return p.replace(defs=tuple(defs))


def _lookup(src: str, index: str, t) -> Attention:
    return Attention("leftmost", "true", Compare("=", Read(index, "i"), Read("pos", "j")),
                     Read(src, "j"), _literal(t.dead), False)


def _atom_domain(e, p: Program):
    probe = p.replace(defs=p.defs + (Def("e$probe", PositionWise(_to_var(e, "i"))),))
    t = infer_types(probe)["e$probe"]
    if t.kind == "bool":
        return [False, True]
    if t.kind == "sym":
        return sorted(t.domain)
    raise UnsupportedConstruct("an integer i-term compared across positions must be an equality of two reads")


def _i_atoms(e):
    out = []

    def go(n):
        if free_vars(n) <= {"i"}:
            if free_vars(n) and n not in out:
                out.append(n)
            return
        for c in children(n):
            go(c)
    go(e)
    return out


def _subst(e, mapping):
    if e in mapping:
        return mapping[e]
    kids = list(children(e))
    if not kids:
        return e
    return _with_children(e, [_subst(c, mapping) for c in kids])


def _with_children(e, kids):
    if isinstance(e, Not):
        return Not(kids[0])
    if isinstance(e, (And, Or, Concat)):
        return type(e)(kids[0], kids[1])
    if isinstance(e, (Compare, Arith)):
        return type(e)(e.op, kids[0], kids[1])
    if isinstance(e, Cond):
        return Cond(kids[0], kids[1], kids[2])
    if isinstance(e, Apply):
        return Apply(e.table, tuple(kids))
    if isinstance(e, Contains):
        return Contains(e.sym, kids[0])
    return e


@dataclass
class Prepared:
    program: Program
    terms: dict = field(default_factory=dict)  # def name -> [(guard or None, flag)]


def prepare(tp: Union[Program, TypedProgram]) -> Prepared:
    """Source-to-source pass producing the attention shapes the emitter handles."""
    tp = tp if isinstance(tp, TypedProgram) else typecheck(tp)
    if tp.program.dialect is not Dialect.SRASP:
        raise UnsupportedConstruct("only S-RASP programs are compiled to transformers")
    p = emit_pastmask_lowering(resolve_dead(tp), tp.types)
    tables = {t.name: t.as_dict() for t in p.tables}
    defs: list = []
    terms: dict = {}

    def cur():
        return p.replace(defs=tuple(defs))

    for d in p.defs:
        rhs = d.rhs
        if isinstance(rhs, PositionWise):
            defs.append(d)
            continue
        if isinstance(rhs, PrefixSum):
            v = rhs.value
            if not isinstance(v, Read):
                defs.append(Def(d.name + "$v", PositionWise(_to_var(v, "i"))))
                v = Read(d.name + "$v", "j")
            defs.append(Def(d.name, PrefixSum(v)))
            continue
        score, value, default = rhs.score, rhs.value, rhs.default
        if not (_is_eq_score(score) and infer_types(cur())[_eq_sides(score)[0].name].kind == "nat"):
            if any(isinstance(n, Compare) and len(free_vars(n)) == 2 and _is_eq_score(n)
                   and infer_types(cur())[_eq_sides(n)[0].name].kind == "nat"
                   for n in walk(score)):
                raise UnsupportedConstruct(f"{d.name}: integer equality mixed with other score terms")
            atoms = _i_atoms(score)
            doms = [_atom_domain(a, cur()) for a in atoms]
            groups: dict = {}
            for combo in product(*doms):
                s = _fold(_subst(score, {a: _literal(v) for a, v in zip(atoms, combo)}), tables)
                guard = _conj([_guard(a, v) for a, v in zip(atoms, combo)])
                groups.setdefault(s, []).append(guard)
            live = [(s, g) for s, g in groups.items() if s != BoolLit(False)]
            tl = []
            for k, (s, guards) in enumerate(live):
                if isinstance(s, Read) and s.var == "j":
                    flag = s.name
                else:
                    flag = f"{d.name}$b{k}"
                    defs.append(Def(flag, PositionWise(_to_var(s, "i"))))
                guard = None
                if len(groups) > 1:
                    guard = f"{d.name}$g{k}"
                    defs.append(Def(guard, PositionWise(simplify(_disj(guards)))))
                tl.append((guard, flag))
            terms[d.name] = tl
            score = BoolLit(False)
            for guard, flag in tl:
                t = Read(flag, "j") if guard is None else And(Read(guard, "i"), Read(flag, "j"))
                score = t if score == BoolLit(False) else Or(score, t)
        if not (isinstance(value, Read) and value.var == "j"):
            defs.append(Def(d.name + "$v", PositionWise(_to_var(value, "i"))))
            value = Read(d.name + "$v", "j")
        if not (isinstance(default, Read) and default.var == "i"):
            defs.append(Def(d.name + "$d", PositionWise(default)))
            default = Read(d.name + "$d", "i")
        defs.append(Def(d.name, Attention(rhs.choice, rhs.mask, score, value, default, False)))
    return Prepared(typecheck(p.replace(defs=tuple(defs))).program, terms)


def _guard(a, v):
    if isinstance(v, bool):
        return a if v else Not(a)
    return Compare("=", a, _literal(v))


def _conj(xs):
    out = BoolLit(True)
    for x in xs:
        out = x if out == BoolLit(True) else And(out, x)
    return out


def _disj(xs):
    out = xs[0]
    for x in xs[1:]:
        out = Or(out, x)
    return out


def _fold(e, tables):
    def fn(n):
        if isinstance(n, Apply) and all(isinstance(a, SymLit) for a in n.args):
            key = tuple(a.value for a in n.args)
            if key in tables[n.table]:
                return SymLit(tables[n.table][key])
        return n
    return simplify(map_expr(e, fn))


# ====================================================================== emission

@dataclass
class Handle:
    kind: str                      # bool | nat | sym
    col: Optional[int] = None      # bool and nat
    syms: Optional[dict] = None    # sym: value -> column

    def cols(self):
        return [self.col] if self.syms is None else list(self.syms.values())


H = mpq(1, 2)


def T(*pairs) -> dict:
    """Sparse row from (column, coefficient) pairs, adding repeated columns."""
    out: dict = {}
    for c, v in pairs:
        out[c] = out.get(c, 0) + v
    return out


class Emitter:
    """Layer builder; usable on its own (``prep=None``) to assemble single blocks."""

    def __init__(self, prep: Optional[Prepared], mode: str):
        if mode not in ("B", "C"):
            raise ValueError("mode must be 'B' or 'C'")
        self.prep, self.mode = prep, mode
        self.p = prep.program if prep else None
        self.tables = {t.name: t.as_dict() for t in self.p.tables} if prep else {}
        self.layout: list = []
        self.layers: list = []
        self.vec: dict = {}
        self.c = {}

    # -- allocation and raw layers
    def new(self, name: str) -> int:
        self.layout.append(name)
        return len(self.layout) - 1

    def ffn(self, units, outputs, b2=(), note=""):
        """``units``: list of (terms dict, bias); ``outputs``: list of (col, {unit: coef})."""
        W1 = tuple(tuple((c, mpq(v)) for c, v in terms.items() if v != 0) for terms, _ in units)
        b1 = tuple(mpq(b) for _, b in units)
        W2 = tuple((c, tuple((k, mpq(v)) for k, v in row.items() if v != 0)) for c, row in outputs)
        self.layers.append(Ffn(W1, b1, W2, tuple((c, mpq(v)) for c, v in b2), note))

    def attn(self, Q, K, V, mask="none", note="", eq=None):
        row = lambda r: tuple((c, mpq(v)) for c, v in r if v != 0)  # noqa: E731
        self.layers.append(Attn(tuple(row(r) for r in Q), tuple(row(r) for r in K),
                                tuple((c, row(r)) for c, r in V), mask, note, eq))

    def linear(self, dst: int, terms: dict, bias=0, note=""):
        """dst += sum(terms) + bias, for values of either sign."""
        neg = {c: -v for c, v in terms.items()}
        self.ffn([(terms, bias), (neg, -mpq(bias))], [(dst, {0: 1, 1: -1})], note=note)

    def relu_into(self, dst: int, terms: dict, bias=0, note=""):
        self.ffn([(terms, bias)], [(dst, {0: 1})], note=note)

    def cleanup(self, cols, note="zero at the default position"):
        """Replace t by relu(t - default) for columns known to be in [0, 1]."""
        units, outs = [], []
        for c in cols:
            units.append(({c: 1, self.c["default"]: -1}, 0))
            units.append(({c: 1}, 0))
            outs.append((c, {len(units) - 2: 1, len(units) - 1: -1}))
        self.ffn(units, outs, note=note)

    def lookup(self, index: int, pairs, note="lookup"):
        """For each (src, dst): dst(i) += src(k_i) where index(i) = k_i / n."""
        c = self.c
        if self.mode == "B":
            Q = [[(index, 2)], [(c["one"], -1)]]
            K = [[(c["pos"], 1)], [(c["posq"], 1)]]
        else:
            Q = [[(c["c2n"], 1)], [(index, -1), (c["c2n"], -1)]]
            K = [[(c["posi"], 1)], [(c["posiq"], 1)]]
        self.attn(Q, K, [(dst, [(src, 1)]) for src, dst in pairs], "none", note)

    # -- position encoding and constants
    def setup(self):
        c = self.c
        pe = ("pos", "posq", "posi", "default", "zero") if self.mode == "B" else ("pos", "posiq")
        for name in pe:
            c[name] = self.new(name)
        c["one"] = self.new("one")
        self.ffn([], [], b2=[(c["one"], 1)], note="constant one")
        if self.mode == "C":
            c["default"] = self.new("default")
            self.relu_into(c["default"], {c["posiq"]: mpq(4, 3)}, mpq(-1, 3), "default indicator")
            c["zero"] = self.new("zero")
            s1, s2 = mpq(36, 5), mpq(4, 3)
            self.ffn([({c["posiq"]: 1}, mpq(-1, 9)), ({c["posiq"]: 1}, mpq(-1, 4))],
                     [(c["zero"], {0: s1, 1: -(s1 + s2)})], note="zero indicator")
            c["posi"] = self.new("posi")
            self.attn([], [], [(c["posi"], [(c["default"], 1)])], "nonstrict_future", "1/(i+2)")
        c["c1"] = self.new("1/n")
        self.attn([[(c["one"], 1)]], [[(c["default"], 1)]], [(c["c1"], [(c["pos"], -1)])],
                  "none", "broadcast 1/n")
        c["posplus"] = self.new("pos+")
        self.relu_into(c["posplus"], {c["pos"]: 1}, 0, "max(0, pos)")
        if self.mode == "B":
            c["c2"] = self.new("1/n^2")
            self.attn([[(c["one"], 1)]], [[(c["default"], 1)]], [(c["c2"], [(c["posq"], 1)])],
                      "none", "broadcast 1/n^2")
            return
        c["c2n"] = self.new("2/n")
        self.relu_into(c["c2n"], {c["c1"]: 2}, 0, "2/n")
        prev = c["c1"]
        for k in (2, 3, 4):
            gate = self.new(f"gate{k}")
            self.relu_into(gate, {prev: 1, c["zero"]: 1}, -1, "value only at position 0")
            c[f"c{k}"] = self.new(f"1/n^{k}")
            self.attn([[(c["one"], -1)]], [[(c["default"], 1)]], [(c[f"c{k}"], [(gate, 1)])],
                      "none", f"average over the n real positions -> 1/n^{k}")
            prev = c[f"c{k}"]
        gd = self.new("gate-default")
        self.relu_into(gd, {c["c1"]: 1, c["default"]: 1}, -1, "1/n only at the default position")
        c["nposi"] = self.new("1/(n(i+2))")
        self.attn([], [], [(c["nposi"], [(gd, 1)])], "nonstrict_future", "1/(n(i+2))")
        c["q2"] = self.new("2/(n(i+2))")
        self.relu_into(c["q2"], {c["nposi"]: 2}, 0, "2/(n(i+2))")

    # -- expressions
    def const_nat(self, value: int, name: str) -> Handle:
        col = self.new(name)
        if value == 0:
            return Handle("nat", col)
        tmp = self.new(name + "~")
        self.relu_into(tmp, {self.c["c1"]: value, self.c["default"]: -value}, 0, f"{value}/n")
        self.lookup(tmp, [(self.c["pos"], col)], "clip literal")
        return Handle("nat", col)

    def finite(self, kids, fn, name: str, out_kind: str) -> Handle:
        """Position-wise function of bool/sym inputs as one FFN over input combinations."""
        d = self.c["default"]
        opts = []
        for h in kids:
            if h.kind == "bool":
                opts.append([(True, {h.col: 1}, 0), (False, {h.col: -1, d: -1}, 1)])
            elif h.kind == "sym":
                opts.append([(v, {c: 1}, 0) for v, c in h.syms.items()])
            else:
                raise UnsupportedConstruct("integer input to a finite position-wise function")
        total = 1
        for o in opts:
            total *= max(len(o), 1)
        if total > MAX_COMBOS:
            raise UnsupportedConstruct(f"{name}: {total} input combinations")
        units, results = [], []
        for combo in product(*opts):
            terms, bias = {d: -1}, 1 - len(combo)
            for _, t, b in combo:
                for c, v in t.items():
                    terms[c] = terms.get(c, 0) + v
                bias += b
            val = fn(*[x for x, _, _ in combo])
            units.append((terms, bias))
            results.append(val)
        if out_kind == "bool":
            col = self.new(name)
            self.ffn(units, [(col, {k: 1 for k, r in enumerate(results) if r})], note=name)
            return Handle("bool", col)
        syms = {}
        for v in sorted(set(results)):
            syms[v] = self.new(f"{name}={v}")
        self.ffn(units, [(syms[v], {k: 1 for k, r in enumerate(results) if r == v}) for v in syms],
                 note=name)
        return Handle("sym", syms=syms)

    def kind_of(self, e) -> str:
        probe = self.p.replace(defs=self.cur_defs + (Def("e$probe", PositionWise(e)),))
        return infer_types(probe)["e$probe"].kind

    def expr(self, e, name: str) -> Handle:
        c = self.c
        if isinstance(e, Read):
            return self.vec[e.name]
        if isinstance(e, NatLit):
            return self.const_nat(e.value, name)
        if isinstance(e, LastIndex):
            col = self.new(name)
            self.relu_into(col, {c["one"]: 1, c["c1"]: -1, c["default"]: -1}, 0, "(n-1)/n")
            return Handle("nat", col)
        if isinstance(e, Arith):
            a, b = self.expr(e.left, name + ".l"), self.expr(e.right, name + ".r")
            if e.op == "-":
                col = self.new(name)
                self.relu_into(col, T((a.col, 1), (b.col, -1), (c["default"], -1)), 0, "subtract")
                return Handle("nat", col)
            tmp, col = self.new(name + "~"), self.new(name)
            self.relu_into(tmp, T((a.col, 1), (b.col, 1), (c["default"], -2)), 0, "add")
            self.lookup(tmp, [(c["pos"], col)], "clip sum")
            return Handle("nat", col)
        if isinstance(e, Compare) and self.kind_of(e.left) == "nat":
            a, b = self.expr(e.left, name + ".l"), self.expr(e.right, name + ".r")
            return self.nat_compare(e.op, a, b, name)
        if isinstance(e, Cond) and self.kind_of(e.then) == "nat":
            t, b, o = (self.expr(x, f"{name}.{k}") for k, x in enumerate((e.then, e.cond, e.other)))
            col = self.new(name)
            self.ffn([(T((t.col, 1), (b.col, 1), (c["default"], -1)), -1),
                      (T((o.col, 1), (b.col, -1), (c["default"], -1)), 0)],
                     [(col, {0: 1, 1: 1})], note="integer if/else")
            return Handle("nat", col)
        kids = list(children(e))
        hs = [self.expr(k, f"{name}.{n}") for n, k in enumerate(kids)]
        tables, out_kind = self.tables, self.kind_of(e)

        def fn(*vals):
            node = _with_children(e, [_literal(v) for v in vals])
            return eval_expr(node, {}, tables, 1)
        return self.finite(hs, fn, name, out_kind)

    def nat_compare(self, op, a: Handle, b: Handle, name) -> Handle:
        def le(x, y, tag):
            idx, z = self.new(f"{name}{tag}~"), self.new(f"{name}{tag}")
            self.relu_into(idx, T((x.col, 1), (y.col, -1)), 0, "difference")
            self.lookup(idx, [(self.c["zero"], z)], "is zero")
            self.cleanup([z])
            return Handle("bool", z)
        if op == "<=":
            return le(a, b, "")
        if op == ">=":
            return le(b, a, "")
        if op in ("<", ">"):
            h = le(b, a, "") if op == "<" else le(a, b, "")
            return self.finite([h], lambda x: not x, name + "!", "bool")
        h1, h2 = le(a, b, "<="), le(b, a, ">=")
        if op == "=":
            return self.finite([h1, h2], lambda x, y: x and y, name + "=", "bool")
        return self.finite([h1, h2], lambda x, y: not (x and y), name + "!=", "bool")

    # -- operations
    def select(self, flag: int, dflt: Handle, val: Handle, name: str) -> Handle:
        """Per coordinate: dflt if flag else val (all entries in [0, 1])."""
        d = self.c["default"]
        if dflt.kind != "sym":
            col = self.new(name)
            self.ffn([({dflt.col: 1, flag: 1, d: -1}, -1), ({val.col: 1, flag: -1, d: -1}, 0)],
                     [(col, {0: 1, 1: 1})], note="default or value")
            return Handle(dflt.kind, col)
        syms = {v: self.new(f"{name}={v}") for v in sorted(set(dflt.syms) | set(val.syms))}
        units, outs = [], []
        for v, col in syms.items():
            row = {}
            if v in dflt.syms:
                units.append(({dflt.syms[v]: 1, flag: 1, d: -1}, -1))
                row[len(units) - 1] = 1
            if v in val.syms:
                units.append(({val.syms[v]: 1, flag: -1, d: -1}, 0))
                row[len(units) - 1] = 1
            outs.append((col, row))
        self.ffn(units, outs, note="default or value")
        return Handle("sym", syms=syms)

    def attention(self, name: str, rhs: Attention) -> Handle:
        c = self.c
        right = rhs.choice == "rightmost"
        mask = {"true": "none", "j<i": "strict_future", "j<=i": "nonstrict_future"}[rhs.mask]
        val, dflt = self.vec[rhs.value.name], self.vec[rhs.default.name]
        flag = self.new(name + "@default")
        copy = Handle(val.kind, self.new(name + "@value")) if val.syms is None else \
            Handle("sym", syms={v: self.new(f"{name}@value={v}") for v in val.syms})
        V = [(flag, [(c["default"], 1)])]
        V += [(dst, [(src, 1)]) for src, dst in zip(val.cols(), copy.cols())]
        tie = 1 if right else -1
        eq = None
        if name not in self.prep.terms:
            qv, kv = _eq_sides(rhs.score)
            r, s = self.vec[qv.name].col, self.vec[kv.name].col
            eq = (r, s)
            sdef = self.new(name + "@sdef")
            if self.mode == "B":
                t, u1 = self.new(name + "@sq2"), self.new(name + "@sq1")
                self.lookup(s, [(c["posq"], t)], "square of the key")
                self.cleanup([t])
                self.lookup(r, [(c["posq"], u1)], "square of the query")
                delta = mpq(1, 4) if right else mpq(3, 4)
                self.linear(sdef, {u1: 1, c["c2"]: -delta}, 0, "default score")
                Q = [[(r, 2)], [(c["one"], -1)], [(c["c2"], tie * H)], [(sdef, 1)]]
                K = [[(s, 1)], [(t, 1)], [(c["posplus"], 1)], [(c["default"], 1)]]
            else:
                t, z, w = (self.new(name + x) for x in ("@inv", "@invsq", "@ninv"))
                self.lookup(s, [(c["posi"], t), (c["posiq"], z)], "inverse and inverse square of the key")
                self.cleanup([t, z])
                self.lookup(r, [(c["nposi"], w)], "1/(n(q+2)) for the query")
                g = mpq(1, 20)  # g(n) = c4/20
                delta = g / 4 if right else 3 * g / 4
                self.linear(sdef, {w: 1, c["c4"]: -delta}, 0, "default score")
                Q = [[(c["c2n"], 1)], [(r, -1), (c["c2n"], -1)], [(c["c4"], tie * g * H)], [(sdef, 1)]]
                K = [[(t, 1)], [(z, 1)], [(c["posplus"], 1)], [(c["default"], 1)]]
        else:
            terms = self.prep.terms[name]
            Q, K = [], []
            for guard, fl in terms:
                Q.append([(self.vec[guard].col if guard else c["one"], 1)])
                K.append([(self.vec[fl].col, 1)])
            Q += [[(c["one"], tie * H)], [(c["one"], mpq(3, 4) if right else mpq(1, 4))]]
            K += [[(c["posplus"], 1)], [(c["default"], 1)]]
        self.attn(Q, K, V, mask, f"{rhs.choice} attention for {name}", eq)
        return self.select(flag, dflt, copy, name)

    def prefix_sum(self, name: str, rhs: PrefixSum) -> Handle:
        c = self.c
        k = self.vec[rhs.value.name]
        s, t = self.new(name + "@avg"), self.new(name)
        self.attn([], [], [(s, [(k.col, 1)])], "nonstrict_future", "average of the prefix")
        if self.mode == "B":
            Q = [[(s, 2)], [(c["posi"], -1)]]
            K = [[(c["pos"], 1)], [(c["posq"], 1)]]
        else:
            Q = [[(c["q2"], 1)], [(s, -1), (c["q2"], -1)]]
            K = [[(c["posi"], 1)], [(c["posiq"], 1)]]
        self.attn(Q, K, [(t, [(c["posplus"], 1)])], "none", "undo the averaging factor")
        return Handle("nat", t)

    def compile(self) -> TransformerSpec:
        if self.prep is None:
            raise ValueError("no program to compile")
        self.setup()
        p = self.p
        in_syms = {v: self.new(f"in={v}") for v in sorted(set(p.sigma) | {PAD})}
        # the input block is written by encode_input, so it sits among the first columns
        self.vec["in"] = Handle("sym", syms=in_syms)
        self.vec["pos"] = Handle("nat", self.c["posplus"])
        self.cur_defs = ()
        for d in p.defs:
            rhs = d.rhs
            if isinstance(rhs, PositionWise):
                h = self.expr(rhs.expr, d.name)
            elif isinstance(rhs, PrefixSum):
                h = self.prefix_sum(d.name, rhs)
            else:
                h = self.attention(d.name, rhs)
            self.vec[d.name] = h
            self.cur_defs = self.cur_defs + (d,)
        out = self.vec["out"]
        if out.kind != "sym":
            raise UnsupportedConstruct("out must be a symbol vector")
        vectors = {k: (h.kind, h.col if h.syms is None else dict(h.syms)) for k, h in self.vec.items()}
        return self.spec(in_syms, dict(out.syms), tuple(p.sigma), tuple(p.gamma), vectors, p.minlen)

    def spec(self, input_coords=None, output_coords=None, sigma=(), gamma=(), vectors=None,
             minlen=None):
        return TransformerSpec(len(self.layout), tuple(self.layout), list(self.layers), self.mode,
                               dict(input_coords or {}), dict(output_coords or {}), sigma, gamma,
                               dict(vectors or {}), minlen)


def compile(p: Union[Program, TypedProgram], mode: str = "B") -> TransformerSpec:  # noqa: A001
    """Compile an S-RASP program to a transformer for position encoding ``mode``."""
    return Emitter(prepare(p), mode).compile()
