"""Expansion of index reads ``v(e(i))`` and neighbor reads ``v(i±c)`` into core forms."""
from __future__ import annotations

from .syntax import (
    Attention, Compare, Dead, Def, Lookup, Neighbor, PositionWise, Program, Read,
    BoolLit, free_vars, map_expr, map_rhs, walk, rhs_exprs,
)


def has_sugar(p: Program) -> bool:
    return any(isinstance(node, (Lookup, Neighbor))
               for d in p.defs for e in rhs_exprs(d.rhs) for node in walk(e))


def _to_i(e):
    """Rename j-reads to i-reads so an expression can head its own definition."""
    return map_expr(e, lambda n: Read(n.name, "i") if isinstance(n, Read) else n)


def neighbor_name(name: str, offset: int) -> str:
    tag = "prev" if offset < 0 else "next"
    k = abs(offset)
    return f"{name}${tag}" + (str(k) if k > 1 else "")


def neighbor_def(name: str, offset: int) -> Def:
    step = -1 if offset < 0 else 1
    src = name if abs(offset) == 1 else neighbor_name(name, offset - step)
    if offset < 0:
        rhs = Attention("rightmost", "j<i", BoolLit(True), Read(src, "j"), Dead(), False)
    else:
        rhs = Attention("leftmost", "j>i", BoolLit(True), Read(src, "j"), Dead(), False)
    return Def(neighbor_name(name, offset), rhs)


def lookup_rhs(name: str, index_vec: str) -> Attention:
    return Attention("leftmost", "true", Compare("=", Read(index_vec, "i"), Read("pos", "j")),
                     Read(name, "j"))


def desugar(p: Program) -> Program:
    """Return an equivalent program using only core definition forms.

    Fresh names are ``<def>$<k>`` for lookups and ``<vec>$prev`` / ``<vec>$next``
    (with a distance suffix beyond 1) for neighbor reads.
    """
    if not has_sugar(p):
        return p
    taken = set(p.def_names()) | {"in", "pos"}
    out: list = []
    defined = set()

    for d in p.defs:
        counter = [0]
        pending: list = []

        def fresh():
            while True:
                counter[0] += 1
                cand = f"{d.name}${counter[0]}"
                if cand not in taken:
                    taken.add(cand)
                    return cand

        def ensure_neighbor(name, offset):
            step = -1 if offset < 0 else 1
            for k in range(1, abs(offset) + 1):
                off = k * step
                nn = neighbor_name(name, off)
                if nn not in defined:
                    pending.append(neighbor_def(name, off))
                    defined.add(nn)
                    taken.add(nn)
            return neighbor_name(name, offset)

        def index_vec(idx):
            if isinstance(idx, Read):
                return idx.name, idx.var
            var = "j" if "j" in free_vars(idx) else "i"
            name = fresh()
            pending.append(Def(name, PositionWise(_to_i(idx))))
            return name, var

        def rewrite(node):
            if isinstance(node, Neighbor):
                return Read(ensure_neighbor(node.name, node.offset), "i")
            if isinstance(node, Lookup):
                vec, var = index_vec(node.index)
                name = fresh()
                pending.append(Def(name, lookup_rhs(node.name, vec)))
                return Read(name, var)
            return node

        rhs = d.rhs
        if isinstance(rhs, PositionWise) and isinstance(rhs.expr, Lookup):
            lk = rhs.expr
            idx = map_expr(lk.index, rewrite)
            if isinstance(idx, Read) and idx.var == "i":
                vec = idx.name
            else:
                vec = fresh()
                pending.append(Def(vec, PositionWise(_to_i(idx))))
            rhs = lookup_rhs(lk.name, vec)
        else:
            rhs = map_rhs(rhs, lambda e: map_expr(e, rewrite))
        out.extend(pending)
        out.append(Def(d.name, rhs))
        defined.add(d.name)
    return p.replace(defs=tuple(out))
