"""Compilers between transducers and RASP programs, and between RASP dialects."""
from __future__ import annotations

from itertools import product
from typing import Mapping, Optional, Sequence, Union

from .fst import END, L2R, R2L, DirectedDft, Dft, Pipeline, is_aperiodic, is_identity_reset
from .interp import eval_expr
from .lang.parser import parse
from .lang.syntax import (
    PAD, And, Apply, Arith, Attention, BoolLit, Compare, Concat, Cond, Contains, Dead,
    Def, Dialect, IoConvention, LastIndex, NatLit, Not, Or, PositionWise, PrefixSum,
    Program, Read, SymLit, Table, free_vars, map_expr, map_rhs, pretty, quote,
    rename_reads, rename_tables, walk,
)
from .lang.typecheck import TypedProgram, infer_types, typecheck
from .minlen import substitute

ENDMARK = "⊣"


class LoweringError(ValueError):
    pass


class NotIdentityReset(LoweringError):
    def __init__(self, index: int):
        super().__init__(f"cascade stage {index} is not identity-reset")
        self.index = index


class CascadeMismatch(LoweringError):
    def __init__(self, which: str, word):
        super().__init__(f"the {which} cascade disagrees with its machine on {word!r}")
        self.which, self.word = which, word


# ------------------------------------------------------------------ helpers

def _typed(p: Union[Program, TypedProgram]) -> TypedProgram:
    return p if isinstance(p, TypedProgram) else typecheck(p)


def _literal(v):
    if isinstance(v, bool):
        return BoolLit(v)
    if isinstance(v, int):
        return NatLit(v)
    return SymLit(v)


def resolve_dead(tp: TypedProgram) -> Program:
    """Replace ``dead`` defaults by the literal they stand for under the current types."""
    defs = []
    for d in tp.program.defs:
        rhs = d.rhs
        if isinstance(rhs, Attention):
            lit = _literal(tp.types[d.name].dead)
            rhs = map_rhs(rhs, lambda e: map_expr(e, lambda n: lit if isinstance(n, Dead) else n))
            rhs = Attention(rhs.choice, rhs.mask, rhs.score, rhs.value, rhs.default, False)
        defs.append(Def(d.name, rhs))
    return tp.program.replace(defs=tuple(defs))


def _to_var(e, var):
    return map_expr(e, lambda n: Read(n.name, var) if isinstance(n, Read) else n)


def simplify(e):
    """Constant folding of Boolean structure and literal comparisons."""
    def fn(n):
        if isinstance(n, Not) and isinstance(n.arg, BoolLit):
            return BoolLit(not n.arg.value)
        if isinstance(n, And):
            for a, b in ((n.left, n.right), (n.right, n.left)):
                if isinstance(a, BoolLit):
                    return b if a.value else BoolLit(False)
        if isinstance(n, Or):
            for a, b in ((n.left, n.right), (n.right, n.left)):
                if isinstance(a, BoolLit):
                    return BoolLit(True) if a.value else b
        if isinstance(n, Compare) and _is_lit(n.left) and _is_lit(n.right) \
                and n.op in ("=", "!="):
            same = n.left.value == n.right.value
            return BoolLit(same if n.op == "=" else not same)
        if isinstance(n, Cond) and isinstance(n.cond, BoolLit):
            return n.then if n.cond.value else n.other
        if isinstance(n, Contains) and isinstance(n.arg, SymLit):
            return BoolLit(n.sym in n.arg.value)
        if isinstance(n, Concat) and isinstance(n.left, SymLit) and isinstance(n.right, SymLit):
            return SymLit(n.left.value + n.right.value)
        return n
    return map_expr(e, fn)


def _is_lit(e):
    return isinstance(e, (BoolLit, SymLit, NatLit))


def _apply_tables(e, tables):
    """Fold table applications whose arguments are all literals."""
    def fn(n):
        if isinstance(n, Apply) and all(isinstance(a, SymLit) for a in n.args):
            key = tuple(a.value for a in n.args)
            if key in tables[n.table]:
                return SymLit(tables[n.table][key])
        return n
    return simplify(map_expr(e, fn))


def _extend(p: Program, lines: Sequence[str] = (), tables: Sequence[Table] = (), **kw) -> Program:
    """Append tables and definition lines (in concrete syntax) to ``p``."""
    p = p.replace(tables=tuple(p.tables) + tuple(tables), **kw)
    return parse(pretty(p) + "".join(line + "\n" for line in lines))


def _table(name: str, fn, *domains) -> Table:
    entries = []
    for key in product(*[sorted(d) for d in domains]):
        v = fn(*key)
        if v is not None:
            entries.append((tuple(key), v))
    return Table(name, len(domains), tuple(entries))


def _domain(p: Program, name: str) -> frozenset:
    return infer_types(p)[name].domain


def _rename_defs(p: Program, mapping: Mapping[str, str], table_map: Mapping[str, str] = None) -> Program:
    table_map = table_map or {}
    defs = []
    for d in p.defs:
        rhs = map_rhs(d.rhs, lambda e: rename_tables(rename_reads(e, mapping), table_map))
        defs.append(Def(mapping.get(d.name, d.name), rhs))
    tables = tuple(Table(table_map.get(t.name, t.name), t.arity, t.entries) for t in p.tables)
    return p.replace(defs=tuple(defs), tables=tables)


def _avoid(p: Program, names) -> Program:
    """Rename definitions and tables of ``p`` that collide with ``names``."""
    names = set(names)
    mapping = {d.name: d.name + "$base" for d in p.defs if d.name in names and d.name != "out"}
    tmap = {t.name: t.name + "$base" for t in p.tables if t.name in names}
    return _rename_defs(p, mapping, tmap) if mapping or tmap else p


def _as_packed(p: Program) -> Program:
    if p.io is IoConvention.PACKED:
        return p
    if p.io is IoConvention.LENGTH:
        return p.replace(io=IoConvention.PACKED, k=1)
    raise LoweringError("expected a length-preserving or packed program")


# -------------------------------------------------------- score normalization

def _atoms(e, var):
    """Maximal subterms of ``e`` whose free variables are exactly {var}."""
    out = []

    def go(n):
        fv = free_vars(n)
        if fv == {var}:
            if n not in out:
                out.append(n)
            return
        for c in _kids(n):
            go(c)
    go(e)
    return out


def _kids(n):
    from .lang.syntax import children
    return list(children(n))


def _subst(e, mapping):
    def go(n):
        if n in mapping:
            return mapping[n]
        if isinstance(n, Not):
            return Not(go(n.arg))
        if isinstance(n, (And, Or, Concat)):
            return type(n)(go(n.left), go(n.right))
        if isinstance(n, (Compare, Arith)):
            return type(n)(n.op, go(n.left), go(n.right))
        if isinstance(n, Cond):
            return Cond(go(n.then), go(n.cond), go(n.other))
        if isinstance(n, Apply):
            return Apply(n.table, tuple(go(a) for a in n.args))
        if isinstance(n, Contains):
            return Contains(n.sym, go(n.arg))
        return n
    return go(e)


def _expr_domain(e, types, tables):
    """Finite set of values an i-only expression can take."""
    reads_ = sorted({n.name for n in walk(e) if isinstance(n, Read)})
    doms = [sorted(types[r].domain) if types[r].kind == "sym" else [False, True] for r in reads_]
    vals = set()
    for combo in product(*doms):
        rows = {r: [v] for r, v in zip(reads_, combo)}
        try:
            vals.add(eval_expr(e, rows, tables, 1))
        except KeyError:
            pass
    return sorted(vals, key=repr)


def normalize_scores(tp: Union[Program, TypedProgram]) -> TypedProgram:
    """Rewrite every attention score so it mentions j only, by splitting on i-profiles.

    The i-only subterms of a mixed score take finitely many values. For each
    assignment the score collapses to a j-only formula; one attention per
    distinct formula is kept and a position-wise case split picks the right one.
    """
    tp = _typed(tp)
    if tp.program.dialect is Dialect.SRASP:
        raise LoweringError("score normalization applies to B-RASP programs")
    p = resolve_dead(tp)
    tables = {t.name: t.as_dict() for t in p.tables}
    types = tp.types
    defs = []
    for d in p.defs:
        rhs = d.rhs
        if not isinstance(rhs, Attention) or free_vars(rhs.score) != {"i", "j"}:
            defs.append(d)
            continue
        atoms = _atoms(rhs.score, "i")
        doms = [_expr_domain(a, types, tables) for a in atoms]
        groups: dict = {}
        for combo in product(*doms):
            s = _apply_tables(_subst(rhs.score, {a: _literal(v) for a, v in zip(atoms, combo)}), tables)
            guard = _conj([Compare("=", a, _literal(v)) if not isinstance(v, bool)
                           else (a if v else Not(a)) for a, v in zip(atoms, combo)])
            groups.setdefault(s, []).append(guard)
        arms = []
        for k, (score, guards) in enumerate(groups.items()):
            if score == BoolLit(False):
                arm = rhs.default
            else:
                name = f"{d.name}${k}"
                defs.append(Def(name, Attention(rhs.choice, rhs.mask, score, rhs.value,
                                                rhs.default, False)))
                arm = Read(name, "i")
            arms.append((arm, _disj(guards)))
        expr = arms[-1][0]
        for arm, guard in reversed(arms[:-1]):
            expr = Cond(arm, guard, expr)
        defs.append(Def(d.name, PositionWise(expr)))
    return typecheck(p.replace(defs=tuple(defs)))


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


def _strict_masks(p: Program) -> Program:
    """Rewrite attention with non-strict or trivial masks into strict-mask attention."""
    defs = []
    for d in p.defs:
        rhs = d.rhs
        if not isinstance(rhs, Attention) or rhs.mask in ("j<i", "j>i"):
            defs.append(d)
            continue
        s_i, v_i = _to_var(rhs.score, "i"), _to_var(rhs.value, "i")
        here = Cond(v_i, s_i, rhs.default)
        left_first = rhs.choice == "leftmost"
        if rhs.mask == "true":
            near, far = ("j>i", "j<i") if left_first else ("j<i", "j>i")
            r, c = d.name + "$r", d.name + "$c"
            defs.append(Def(r, Attention(rhs.choice, near, rhs.score, rhs.value, rhs.default, False)))
            defs.append(Def(c, PositionWise(Cond(v_i, s_i, Read(r, "i")))))
            defs.append(Def(d.name, Attention(rhs.choice, far, rhs.score, rhs.value, Read(c, "i"), False)))
            continue
        strict = "j<i" if rhs.mask == "j<=i" else "j>i"
        # the own position is the last candidate for leftmost over j<=i, the first for rightmost
        own_last = (rhs.mask == "j<=i") == left_first
        if own_last:
            defs.append(Def(d.name, Attention(rhs.choice, strict, rhs.score, rhs.value, here, False)))
        else:
            r = d.name + "$r"
            defs.append(Def(r, Attention(rhs.choice, strict, rhs.score, rhs.value, rhs.default, False)))
            defs.append(Def(d.name, PositionWise(Cond(v_i, s_i, Read(r, "i")))))
    return p.replace(defs=tuple(defs))


# -------------------------------------------------------- B-RASP -> pipeline

def _tuple_eval(e, names, x, tables):
    rows = {nm: [v] for nm, v in zip(names, x)}
    return eval_expr(e, rows, tables, 1)


def _ordered(xs):
    seen = {}
    for x in xs:
        seen.setdefault(x, None)
    return tuple(seen)


def brasp_to_pipeline(tp: Union[Program, TypedProgram]) -> Pipeline:
    """One sequential transducer per definition over tuple alphabets.

    Stage 0 wraps each input symbol into a 1-tuple. Every later stage appends
    the value of one definition. Strict-mask attention becomes a 2-state-family
    machine read left to right (j<i) or right to left (j>i).
    """
    tp = _typed(tp)
    if tp.program.dialect is not Dialect.BRASP:
        raise LoweringError("brasp_to_pipeline needs a B-RASP program")
    p = _strict_masks(resolve_dead(normalize_scores(tp)))
    tables = {t.name: t.as_dict() for t in p.tables}
    names = ["in"]
    alphabet = tuple((a,) for a in p.sigma)
    stages = [DirectedDft(Dft(tuple(p.sigma), alphabet, ("q",), "q",
                              {**{("q", a): (((a,),), "q") for a in p.sigma},
                               ("q", END): ((), "q")}), L2R)]
    for d in p.defs:
        rhs = d.rhs
        if isinstance(rhs, PositionWise):
            delta = {("q", x): (((*x, _tuple_eval(rhs.expr, names, x, tables)),), "q") for x in alphabet}
            delta[("q", END)] = ((), "q")
            gamma = _ordered(o[0][0] for o in delta.values() if o[0])
            machine = Dft(alphabet, gamma, ("q",), "q", delta)
            direction = L2R
        else:
            machine, direction = _attention_machine(rhs, names, alphabet, tables)
        stages.append(DirectedDft(machine, direction))
        names.append(d.name)
        alphabet = machine.gamma
    return Pipeline(tuple(stages), tuple(names))


def _attention_machine(rhs: Attention, names, alphabet, tables):
    s = {x: bool(_tuple_eval(rhs.score, names, x, tables)) for x in alphabet}
    v = {x: _tuple_eval(rhs.value, names, x, tables) for x in alphabet}
    dflt = {x: _tuple_eval(rhs.default, names, x, tables) for x in alphabet}
    values = _ordered(v[x] for x in alphabet)
    states = ("def",) + tuple(("val", y) for y in values)
    # nearest satisfying j wins: left-to-right rightmost j<i or right-to-left leftmost j>i
    update = (rhs.choice == "rightmost") == (rhs.mask == "j<i")
    direction = L2R if rhs.mask == "j<i" else R2L
    delta = {}
    for q in states:
        for x in alphabet:
            held = dflt[x] if q == "def" else q[1]
            nxt = q
            if s[x] and (q == "def" or update):
                nxt = ("val", v[x])
            delta[(q, x)] = (((*x, held),), nxt)
        delta[(q, END)] = ((), q)
    gamma = _ordered(o[0][0] for o in delta.values() if o[0])
    return Dft(alphabet, gamma, states, "def", delta), direction


def pipeline_output(pl: Pipeline, w, component: str = "out") -> str:
    return "".join(pl.project(tuple(w), component))


def check_pipeline_aperiodic(pl: Pipeline) -> list:
    """Aperiodicity verdict for every stage machine."""
    return [is_aperiodic(s.machine if isinstance(s, DirectedDft) else s) for s in pl.stages]


# ----------------------------------------------------------- cascades -> B-RASP

def _run_from(t: Dft, q, word, end: bool):
    out = []
    for a in word:
        o, q = t.delta[(q, a)]
        out.extend(o)
    if end:
        out.extend(t.delta[(q, END)][0])
    return "".join(out)


def _reset_target(t: Dft, word):
    """State the word resets to, or None if its map is the identity."""
    target = None
    for a in word:
        m = t.state_map(a)
        if len(set(m)) == 1:
            target = m[0]
    return target


def cascade_to_brasp(base: Union[Program, TypedProgram], cascade: Sequence) -> Program:
    """Append one block per 2-state identity-reset stage to a packed program.

    The block finds the state before each cell from the nearest cell (on the
    reading side) that holds a reset symbol, then looks up the output of the
    whole cell in a table. The end marker is glued to the last cell read.
    """
    p = _as_packed(_typed(base).program)
    stages = [s if isinstance(s, DirectedDft) else DirectedDft(s, L2R) for s in cascade]
    for k, s in enumerate(stages):
        t = s.machine
        if len(t.states) > 2 or not is_identity_reset(t):
            raise NotIdentityReset(k)
    reserved = {"c$first", "c$last"} | {f"{x}{k}" for k in range(len(stages) + 1)
                                         for x in ("z", "st", "sym", "lr", "em", "oa", "ob")}
    p = _avoid(p, reserved)
    if not stages:
        return typecheck(p).program
    p = _rename_defs(p, {"out": "z0"})
    lines = ["c$first(i) = rightmost j [j<i, true] false : true;",
             "c$last(i) = leftmost j [j>i, true] false : true;"]
    p = _extend(p, lines)
    for k, s in enumerate(stages):
        t = s.machine
        z = f"z{k}"
        sig = set(t.sigma)
        dom = {w for w in _domain(p, z) if all(c in sig for c in w)}
        if ENDMARK in sig or any(ENDMARK in g for g in t.gamma):
            raise LoweringError(f"{ENDMARK!r} is reserved for the end marker")
        q1 = t.start
        q2 = next((q for q in t.states if q != q1), q1)
        if s.direction == L2R:
            reset = lambda w: _reset_target(t, w)  # noqa: E731
            find = f"st{k}(i) = rightmost j [j<i, lr{k}({z}(j)) != '-'] lr{k}({z}(j)) = 'q1' : true;"
            edge = "c$last"
        else:
            reset = lambda w: _reset_target(t, w[::-1])  # noqa: E731
            find = f"st{k}(i) = leftmost j [j>i, lr{k}({z}(j)) != '-'] lr{k}({z}(j)) = 'q1' : true;"
            edge = "c$first"

        def cell_out(q, w, s=s, t=t):
            end = w.endswith(ENDMARK)
            body = w[:-1] if end else w
            if s.direction == L2R:
                return _run_from(t, q, body, end)
            return _run_from(t, q, body[::-1], end)[::-1]

        lr = _table(f"lr{k}", lambda w: {None: "-", q1: "q1"}.get(reset(w), "q2"), dom)
        em = _table(f"em{k}", lambda w: w + ENDMARK, dom)
        syms = dom | {w + ENDMARK for w in dom}
        oa = _table(f"oa{k}", lambda w: cell_out(q1, w), syms)
        ob = _table(f"ob{k}", lambda w: cell_out(q2, w), syms)
        p = _extend(p, [
            find,
            f"sym{k}(i) = em{k}({z}(i)) if {edge}(i) else {z}(i);",
            f"z{k + 1}(i) = oa{k}(sym{k}(i)) if st{k}(i) else ob{k}(sym{k}(i));",
        ], [lr, em, oa, ob])
    last = f"z{len(stages)}"
    p = _rename_defs(p, {last: "out"})
    gamma = tuple(stages[-1].gamma)
    width = max((len(w) for w in _domain(p, "out")), default=1)
    return typecheck(p.replace(gamma=gamma, k=max(width, 1))).program


def _compose_stages(stages, w):
    w = tuple(w)
    for s in stages:
        w = s.transduce(w)
    return "".join(w)


def arational_to_brasp(f_left, f_right, cascades, max_len: int = 6) -> Program:
    """Compile ``f_right`` after ``f_left`` given identity-reset cascades for each.

    Each cascade is first checked against its machine on every word up to
    ``max_len``; a disagreement raises ``CascadeMismatch``.
    """
    fl = f_left if isinstance(f_left, DirectedDft) else DirectedDft(f_left, L2R)
    fr = f_right if isinstance(f_right, DirectedDft) else DirectedDft(f_right, R2L)
    c_left, c_right = (list(c) for c in cascades)
    for which, machine, cas, sigma in (("left", fl, c_left, fl.sigma),
                                       ("right", fr, c_right, fr.sigma)):
        for n in range(max_len + 1):
            for w in product(sigma, repeat=n):
                if "".join(machine.transduce(w)) != _compose_stages(cas, w):
                    raise CascadeMismatch(which, "".join(w))
    sigma = tuple(fl.sigma)
    base = Program(Dialect.BRASP, IoConvention.PACKED, sigma, sigma,
                   (Def("out", PositionWise(Read("in", "i"))),), k=1, name="arational")
    return cascade_to_brasp(base, c_left + c_right)


# ------------------------------------------------------ separator compositions

SEP = "|"


def _map_segments(w: str, fn) -> str:
    return SEP.join(fn(seg) for seg in w.split(SEP))


def _bracket_lines(z: str, zb: str):
    return [
        "c$first(i) = rightmost j [j<i, true] false : true;",
        "c$last(i) = leftmost j [j>i, true] false : true;",
        f"{zb}(i) = '|' . {z}(i) . '|' if c$first(i) and c$last(i) else "
        f"('|' . {z}(i) if c$first(i) else ({z}(i) . '|' if c$last(i) else {z}(i)));",
    ]


def _unbracket_tables(dom):
    return [
        _table("dropfirst", lambda w: w[1:], dom),
        _table("droplast", lambda w: w[:-1], dom),
        _table("dropboth", lambda w: w[1:-1], dom),
    ]


def _unbracket(src: str) -> str:
    return (f"dropboth({src}(i)) if c$first(i) and c$last(i) else (dropfirst({src}(i)) if c$first(i) "
            f"else (droplast({src}(i)) if c$last(i) else {src}(i)))")


_MR_NAMES = ("c$first", "c$last", "zb", "prev", "next", "head", "body", "tail", "nosep",
             "ptail", "rbody", "rbu", "nhead", "sep", "headf", "bodyf", "tailf", "revf",
             "mrevf", "mdupf", "dropfirst", "droplast", "dropboth", "d1", "d2", "a1", "a2",
             "b1", "b2", "junc", "sym1", "sym2", "xslot", "dbody", "dbu", "z")


def _separator_prelude(p: Program):
    p = _as_packed(_typed(p).program)
    if p.dialect is Dialect.SRASP:
        raise LoweringError("expected a packed B-RASP program")
    if SEP not in p.gamma:
        raise LoweringError(f"the output alphabet must contain the separator {SEP!r}")
    p = _avoid(p, _MR_NAMES)
    p = _rename_defs(p, {"out": "z"}).replace(dialect=Dialect.BRASP_POS)
    p = _extend(p, _bracket_lines("z", "zb"))
    dom = _domain(p, "zb")
    pieces = [
        _table("headf", lambda w: w.split(SEP)[0], dom),
        _table("tailf", lambda w: w.split(SEP)[-1], dom),
        _table("bodyf", lambda w: w[w.index(SEP): w.rindex(SEP) + 1] if SEP in w else "", dom),
    ]
    p = _extend(p, [
        "prev(i) = rightmost j [j<i, '|' in zb(j)] pos(j) : n-1;",
        "next(i) = leftmost j [j>i, '|' in zb(j)] pos(j) : 0;",
        "head(i) = headf(zb(i));",
        "body(i) = bodyf(zb(i));",
        "tail(i) = tailf(zb(i));",
    ], pieces)
    return p


def _finish_separator(p: Program, width_hint: Optional[int] = None) -> Program:
    width = max((len(w) for w in _domain(p, "out")), default=1)
    return typecheck(p.replace(k=max(width, 1))).program


def compose_mapreverse(p: Union[Program, TypedProgram]) -> Program:
    """Packed program for map-reverse after ``p``: each |-free segment is reversed.

    The output of ``p`` is bracketed with separators at both ends so every cell
    without a separator has separator cells on both sides, then the segment
    reversal block runs, and the two added separators are dropped again.
    """
    p = _separator_prelude(p)
    strings = _domain(p, "zb") | _domain(p, "head") | _domain(p, "tail")
    p = _extend(p, [
        "nosep(i) = revf(zb(next(i) - (pos(i) - prev(i))));",
        "ptail(i) = revf(tail(prev(i)));",
        "rbody(i) = mrevf(body(i));",
    ], [_table("revf", lambda w: w[::-1], strings),
        _table("mrevf", lambda w: _map_segments(w, lambda s: s[::-1]), _domain(p, "body"))])
    p = _extend(p, [
        "nhead(i) = revf(head(next(i)));",
        f"rbu(i) = {_unbracket('rbody')};",
        "sep(i) = ptail(i) . rbu(i) . nhead(i);",
        "out(i) = sep(i) if '|' in zb(i) else nosep(i);",
    ], _unbracket_tables(_domain(p, "rbody")))
    return _finish_separator(p)


def compose_mapduplicate(p: Union[Program, TypedProgram]) -> Program:
    """Packed program for map-duplicate after ``p``: each |-free segment s becomes ss.

    A cell without separators at distance d1 from the previous separator cell
    and d2 from the next one emits two units of the doubled segment; the unit
    straddling the middle is the head of the next separator cell followed by
    the tail of the previous one.
    """
    p = _separator_prelude(p)
    p = _extend(p, [
        "d1(i) = pos(i) - prev(i);",
        "d2(i) = next(i) - pos(i);",
        "a1(i) = pos(i) + d1(i) - 1;",
        "a2(i) = pos(i) + d1(i);",
        "b1(i) = pos(i) - d2(i) - 1;",
        "b2(i) = pos(i) - d2(i);",
        "junc(i) = head(next(i)) . tail(prev(i));",
        "sym1(i) = zb(a1(i)) if d1(i) <= d2(i) else (junc(i) if d1(i) - 1 = d2(i) else zb(b1(i)));",
        "sym2(i) = zb(a2(i)) if d1(i) < d2(i) else (junc(i) if d1(i) = d2(i) else zb(b2(i)));",
        "nosep(i) = sym1(i) . sym2(i);",
        "xslot(i) = (zb(i-1) if d1(i) > 1 else head(i) . tail(prev(i))) . head(i);",
        "dbody(i) = mdupf(body(i));",
    ], [_table("mdupf", lambda w: _map_segments(w, lambda s: s + s), _domain(p, "body"))])
    p = _extend(p, [
        f"dbu(i) = {_unbracket('dbody')};",
        "sep(i) = xslot(i) . dbu(i) . tail(i);",
        "out(i) = sep(i) if '|' in zb(i) else nosep(i);",
    ], _unbracket_tables(_domain(p, "dbody")))
    return _finish_separator(p)


# ------------------------------------------------------------------- S-RASP

def _minlen(p: Program) -> str:
    return p.minlen if p.minlen is not None else "l"


def srasp_compose(p1: Union[Program, TypedProgram], p2: Union[Program, TypedProgram],
                  q1: Optional[str] = None, q2: Optional[str] = None) -> Program:
    """S-RASP program for ``p2`` after ``p1``; the output of p1 is the padded input of p2."""
    a, b = _typed(p1).program, _typed(p2).program
    for p in (a, b):
        if p.dialect is not Dialect.SRASP:
            raise LoweringError("srasp_compose needs S-RASP programs")
    if set(b.sigma) != set(a.gamma):
        raise LoweringError("the output alphabet of the first program must be the input alphabet of the second")
    q1 = q1 or _minlen(a)
    q2 = q2 or _minlen(b)
    ma = {d.name: ("z" if d.name == "out" else "f_" + d.name) for d in a.defs}
    ta = {t.name: "f_" + t.name for t in a.tables}
    mb = {d.name: ("out" if d.name == "out" else "g_" + d.name) for d in b.defs}
    mb["in"] = "z"
    tb = {t.name: "g_" + t.name for t in b.tables}
    a = _rename_defs(a, ma, ta)
    b = _rename_defs(b, mb, tb)
    minlen = f"max({q1}, {substitute(q2, q1)})"
    return typecheck(Program(Dialect.SRASP, IoConvention.PADDED, a.sigma, b.gamma,
                             a.defs + b.defs, minlen=minlen, tables=a.tables + b.tables,
                             name="composed")).program


def hom_to_srasp(h: Mapping[str, str], sigma: Optional[Sequence[str]] = None,
                 gamma: Optional[Sequence[str]] = None) -> Program:
    """S-RASP program for the string homomorphism ``h`` with padded output."""
    sigma = tuple(sigma) if sigma is not None else tuple(h)
    images = {a: tuple(h[a]) if isinstance(h[a], str) else tuple(h[a]) for a in sigma}
    if gamma is None:
        gamma = tuple(sorted({c for im in images.values() for c in im}))
    K = max((len(im) for im in images.values()), default=0)
    head = Program(Dialect.SRASP, IoConvention.PADDED, sigma, tuple(gamma), (),
                   minlen=f"{K}*l", name="homomorphism")
    if K == 0:
        return typecheck(_extend(head, ["out(i) = '_';"])).program
    lens = "0"
    for a in reversed(sigma):
        lens = f"{len(images[a])} if in(i) = {quote(a)} else ({lens})"
    lines = [f"lens(i) = {lens};",
             "ends(i) = sum j [j<=i] lens(j);",
             "starts(i) = ends(i) - lens(i);",
             "sym0(i) = rightmost j [true, pos(i) = starts(j)] in(j) : '_';"]
    for k in range(1, K):
        lines.append(f"sym{k}(i) = rightmost j [j<i, true] sym{k - 1}(j) : '_';")
    out = "'_'"
    for g in reversed(gamma):
        cases = [f"sym{k}(i) = {quote(a)}" for a in sigma for k, c in enumerate(images[a]) if c == g]
        if cases:
            out = f"{quote(g)} if {' or '.join(cases)} else ({out})"
    lines.append(f"out(i) = {out};")
    return typecheck(_extend(head, lines)).program


def unpack_packed(p: Union[Program, TypedProgram]) -> Program:
    """S-RASP program with padded output equivalent to a packed (or length) program.

    The packed program is first made insensitive to the pads following the
    input, then its cells are spread out by the identity homomorphism on cells.
    """
    tp = _typed(p)
    src = _as_packed(tp.program)
    if src.dialect is Dialect.SRASP:
        raise LoweringError("expected a packed B-RASP program")
    if PAD in src.gamma:
        raise LoweringError("the pad symbol cannot be an output symbol")
    guarded = _pad_guard(tp)
    cells = sorted(w for w in infer_types(guarded)["u$z"].domain
                   if w != PAD and len(w) <= src.k and all(c in src.gamma for c in w))
    inner = typecheck(guarded.replace(gamma=tuple(cells))).program
    hom = hom_to_srasp({w: w for w in cells}, cells, src.gamma)
    return srasp_compose(inner, hom, "l", f"{src.k}*l")


def _pad_guard(tp: TypedProgram) -> Program:
    p = resolve_dead(tp)
    p = _avoid(p, ("u$ln", "u$last", "u$z"))
    last = "u$last"

    def clip(e, var):
        def fn(n):
            if isinstance(n, LastIndex):
                return Read(last, var)
            if (isinstance(n, Arith) and n.op == "+") or (isinstance(n, NatLit) and n.value > 0):
                v = min(free_vars(n) or {"i"}) if var == "*" else var
                return Cond(n, Compare("<=", n, Read(last, v)), Read(last, v))
            return n
        return map_expr(e, fn)

    not_pad = Compare("!=", Read("in", "j"), SymLit(PAD))
    defs = [Def("u$ln", Attention("leftmost", "true", Compare("=", Read("in", "j"), SymLit(PAD)),
                                  Read("pos", "j"), NatLit(0), False)),
            Def(last, PositionWise(Arith("-", Read("u$ln", "i"), NatLit(1))))]
    guards = {}
    for d in p.defs:
        rhs = d.rhs
        if isinstance(rhs, PositionWise):
            defs.append(Def(d.name, PositionWise(clip(rhs.expr, "i"))))
            continue
        score = rhs.score
        cross = _cross_eq_side(score)
        if cross is not None:
            v2 = cross.name
            g = guards.get(v2)
            if g is None:
                g = guards[v2] = v2 + "$g"
                defs.append(Def(g, PositionWise(Cond(Read(v2, "i"), Compare("!=", Read("in", "i"), SymLit(PAD)),
                                                     Read("u$ln", "i")))))
            score = _swap_j_read(score, v2, g)
        else:
            score = And(clip(score, "*"), not_pad)
        defs.append(Def(d.name, Attention(rhs.choice, rhs.mask, score, clip(rhs.value, "j"),
                                          clip(rhs.default, "i"), False)))
    defs = [Def("u$body" if x.name == "out" else x.name, x.rhs) for x in defs]
    defs = [Def(x.name, map_rhs(x.rhs, lambda e: rename_reads(e, {"out": "u$body"}))) for x in defs]
    defs.append(Def("u$z", PositionWise(Cond(SymLit(PAD), Compare("=", Read("in", "i"), SymLit(PAD)),
                                             Read("u$body", "i")))))
    defs.append(Def("out", PositionWise(Read("u$z", "i"))))
    q = Program(Dialect.SRASP, IoConvention.PADDED, p.sigma, p.gamma, tuple(defs),
                minlen="l", tables=p.tables, name=p.name)
    return _total_tables(q)


def _cross_eq_side(score):
    if isinstance(score, Compare) and score.op == "=" and isinstance(score.left, Read) \
            and isinstance(score.right, Read) and {score.left.var, score.right.var} == {"i", "j"}:
        return score.left if score.left.var == "j" else score.right
    return None


def _swap_j_read(score, name, new):
    return map_expr(score, lambda n: Read(new, "j") if isinstance(n, Read) and n.var == "j"
                    and n.name == name else n)


def _total_tables(p: Program) -> Program:
    """Extend tables so they are defined on every key their arguments can take."""
    while True:
        types = infer_types(p)
        need: dict = {}
        for d in p.defs:
            for e in (d.rhs.expr,) if isinstance(d.rhs, PositionWise) else \
                    ((d.rhs.value,) if isinstance(d.rhs, PrefixSum)
                     else (d.rhs.score, d.rhs.value, d.rhs.default)):
                for n in walk(e):
                    if isinstance(n, Apply):
                        doms = [_arg_domain(a, types, p) for a in n.args]
                        need.setdefault(n.table, set()).update(product(*doms))
        changed = False
        tables = []
        for t in p.tables:
            have = t.as_dict()
            fill = next(iter(sorted(have.values())), "")
            extra = tuple((k, fill) for k in sorted(need.get(t.name, ())) if k not in have)
            if extra:
                changed = True
            tables.append(Table(t.name, t.arity, t.entries + extra))
        p = p.replace(tables=tuple(tables))
        if not changed:
            return p


def _arg_domain(e, types, p):
    if isinstance(e, Read):
        return sorted(types[e.name].domain)
    if isinstance(e, SymLit):
        return [e.value]
    # compound argument: reuse the typechecker by probing a scratch definition
    probe = p.replace(defs=p.defs + (Def("u$probe", PositionWise(_to_var(e, "i"))),))
    return sorted(infer_types(probe)["u$probe"].domain)
