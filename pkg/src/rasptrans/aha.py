"""Exact runtime for masked average-hard-attention transformer encoders.

Activations are kept column-wise (one list of rationals per coordinate, over
positions -1 .. n-1) so that a layer only rebuilds the columns it writes.
Weights are sparse: a row is a tuple of ``(column, coefficient)`` pairs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from gmpy2 import mpq

ZERO = mpq(0)
ONE = mpq(1)

PE_B = ("pos", "posq", "posi", "default", "zero")
PE_C = ("pos", "posiq")


class DimensionMismatch(ValueError):
    pass


class DecodeError(ValueError):
    pass


def Q(x) -> mpq:
    """Coerce ints, strings like '3/4', Fractions or mpq to an exact rational."""
    if isinstance(x, str):
        return mpq(x)
    return mpq(x)


# ------------------------------------------------------------------ activations

@dataclass
class ActivationSeq:
    """Columns indexed by coordinate; entry ``p`` of a column is position ``p - 1``."""
    n: int
    layout: tuple
    cols: list

    @classmethod
    def zeros(cls, n: int, layout: Sequence[str]) -> "ActivationSeq":
        z = [ZERO] * (n + 1)
        return cls(n, tuple(layout), [z for _ in layout])

    @property
    def d(self) -> int:
        return len(self.layout)

    def index(self, name: str) -> int:
        return self.layout.index(name)

    def at(self, i: int, coord) -> mpq:
        c = coord if isinstance(coord, int) else self.index(coord)
        return self.cols[c][i + 1]

    def vector(self, i: int) -> list:
        return [col[i + 1] for col in self.cols]

    def column(self, coord) -> list:
        c = coord if isinstance(coord, int) else self.index(coord)
        return list(self.cols[c][1:])

    def with_columns(self, updates: dict) -> "ActivationSeq":
        cols = list(self.cols)
        for c, col in updates.items():
            cols[c] = col
        return ActivationSeq(self.n, self.layout, cols)


def pe_values(i: int, n: int, mode: str) -> dict:
    """Position-encoding coordinates at position ``i`` (which may be -1)."""
    if mode == "B":
        return {"pos": mpq(i, n), "posq": mpq(i * i, n * n), "posi": mpq(1, i + 2),
                "default": ONE if i == -1 else ZERO, "zero": ONE if i == 0 else ZERO}
    if mode == "C":
        return {"pos": mpq(i, n), "posiq": mpq(1, (i + 2) ** 2)}
    raise ValueError(f"unknown position-encoding mode {mode!r}")


def build_pe(n: int, mode: str = "B", layout: Optional[Sequence[str]] = None) -> ActivationSeq:
    """Activation sequence holding only the position encoding (other coordinates zero)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    names = PE_B if mode == "B" else PE_C
    layout = tuple(layout) if layout is not None else names
    u = ActivationSeq.zeros(n, layout)
    updates = {}
    for name in names:
        if name in layout:
            updates[layout.index(name)] = [pe_values(i, n, mode)[name] for i in range(-1, n)]
    return u.with_columns(updates)


# ----------------------------------------------------------------------- layers

def _row(terms) -> tuple:
    return tuple((int(c), Q(v)) for c, v in terms if Q(v) != 0)


@dataclass(frozen=True)
class Ffn:
    """u' = u + W2 relu(W1 u + b1) + b2, with sparse rows.

    ``W1``: one row per hidden unit. ``W2``: pairs ``(out column, ((hidden, coef), ...))``.
    ``b2``: pairs ``(out column, bias)``.
    """
    W1: tuple
    b1: tuple
    W2: tuple
    b2: tuple = ()
    note: str = ""

    @property
    def kind(self):
        return "ffn"


@dataclass(frozen=True)
class Attn:
    """Score is sum over k of <Q[k], u_i> * <K[k], u_j>; V rows write into output columns."""
    Q: tuple
    K: tuple
    V: tuple
    mask: str = "none"  # none | strict_future | nonstrict_future
    note: str = ""
    eq: Optional[tuple] = None  # (query column, key column) of an equality score

    @property
    def kind(self):
        return "attn"


MASKS = ("none", "strict_future", "nonstrict_future")


def _check(layer, d: int):
    cols = []
    if isinstance(layer, Ffn):
        if len(layer.W1) != len(layer.b1):
            raise DimensionMismatch("W1 and b1 disagree on the hidden width")
        cols += [c for row in layer.W1 for c, _ in row]
        cols += [c for c, _ in layer.W2] + [c for c, _ in layer.b2]
        h = len(layer.W1)
        if any(k >= h or k < 0 for _, row in layer.W2 for k, _ in row):
            raise DimensionMismatch("W2 refers to a hidden unit that does not exist")
    else:
        if len(layer.Q) != len(layer.K):
            raise DimensionMismatch("Q and K must have the same number of rows")
        if layer.mask not in MASKS:
            raise ValueError(f"unknown mask {layer.mask!r}")
        cols += [c for row in layer.Q + layer.K for c, _ in row]
        cols += [c for c, _ in layer.V] + [c for _, row in layer.V for c, _ in row]
    bad = [c for c in cols if c < 0 or c >= d]
    if bad:
        raise DimensionMismatch(f"coordinate {bad[0]} outside width {d}")


def _dot(row, cols, p):
    s = ZERO
    for c, v in row:
        x = cols[c][p]
        if x:
            s += v * x
    return s


def apply_layer(layer, u: ActivationSeq, scores: Optional[list] = None) -> ActivationSeq:
    """Apply one layer (with its residual connection) exactly.

    If ``scores`` is a list, the score matrix of an attention layer is appended
    to it as ``(layer, {(i, j): score})`` for inspection.
    """
    _check(layer, u.d)
    P = u.n + 1
    cols = u.cols
    if isinstance(layer, Ffn):
        hidden = []
        for row, b in zip(layer.W1, layer.b1):
            hidden.append([max(ZERO, _dot(row, cols, p) + b) for p in range(P)])
        updates = {}
        for c, row in layer.W2:
            col = list(updates.get(c, cols[c]))
            for k, v in row:
                h = hidden[k]
                for p in range(P):
                    if h[p]:
                        col[p] += v * h[p]
            updates[c] = col
        for c, b in layer.b2:
            col = list(updates.get(c, cols[c]))
            for p in range(P):
                col[p] += b
            updates[c] = col
        return u.with_columns(updates)

    qs = [[_dot(row, cols, p) for row in layer.Q] for p in range(P)]
    ks = [[_dot(row, cols, p) for row in layer.K] for p in range(P)]
    vs = [[_dot(row, cols, p) for _, row in layer.V] for p in range(P)]
    out = [[ZERO] * P for _ in layer.V]
    record = {} if scores is not None else None
    for p in range(P):
        if layer.mask == "none":
            js = range(P)
        elif layer.mask == "strict_future":
            js = range(p)
        else:
            js = range(p + 1)
        best, arg = None, []
        qi = qs[p]
        for q in js:
            kj = ks[q]
            s = ZERO
            for a, b in zip(qi, kj):
                if a and b:
                    s += a * b
            if record is not None:
                record[(p - 1, q - 1)] = s
            if best is None or s > best:
                best, arg = s, [q]
            elif s == best:
                arg.append(q)
        if not arg:
            continue  # nowhere to attend: the residual keeps u_i
        m = len(arg)
        for r in range(len(layer.V)):
            tot = ZERO
            for q in arg:
                tot += vs[q][r]
            out[r][p] = tot / m if m > 1 else tot
    if record is not None:
        scores.append((layer, record))
    updates = {}
    for r, (c, _) in enumerate(layer.V):
        col = list(updates.get(c, cols[c]))
        o = out[r]
        for p in range(P):
            if o[p]:
                col[p] += o[p]
        updates[c] = col
    return u.with_columns(updates)


@dataclass
class TransformerSpec:
    d: int
    layout: tuple
    layers: list
    mode: str = "B"
    input_coords: dict = field(default_factory=dict)   # symbol -> coordinate
    output_coords: dict = field(default_factory=dict)  # symbol -> coordinate
    sigma: tuple = ()
    gamma: tuple = ()
    vectors: dict = field(default_factory=dict)  # program vector -> (kind, column or {symbol: column})
    minlen: Optional[str] = None  # minimum vector length q(l) of the source program

    def __post_init__(self):
        if len(self.layout) != self.d:
            raise DimensionMismatch("layout length differs from d")
        for layer in self.layers:
            _check(layer, self.d)


def run(spec: TransformerSpec, u0: ActivationSeq, scores: Optional[list] = None) -> ActivationSeq:
    u = u0
    for layer in spec.layers:
        u = apply_layer(layer, u, scores)
    return u


def _allowed(mask: str, i: int, n: int):
    if mask == "none":
        return range(-1, n)
    return range(-1, i if mask == "strict_future" else i + 1)


def equality_margins(spec: TransformerSpec, u0: ActivationSeq) -> list:
    """Score gaps of every equality-score attention layer.

    For each layer tagged with ``eq`` and each real position i, the gap is
    the best score among the intended targets (real j whose key equals the
    query, or the default position when there is none) minus the best score
    elsewhere. Returns ``[(layer index, note, min gap, argmin position)]``;
    a positive gap means the intended target wins strictly.
    """
    out = []
    u = u0
    for k, layer in enumerate(spec.layers):
        rec: list = []
        nxt = apply_layer(layer, u, rec if isinstance(layer, Attn) and layer.eq else None)
        if rec:
            qc, kc = layer.eq
            scores = rec[0][1]
            worst, where = None, None
            for i in range(u.n):
                js = list(_allowed(layer.mask, i, u.n))
                hit = [j for j in js if j >= 0 and u.at(j, kc) == u.at(i, qc)]
                target = hit or [-1]
                rest = [j for j in js if j not in target]
                if not rest:
                    continue
                gap = max(scores[(i, j)] for j in target) - max(scores[(i, j)] for j in rest)
                if worst is None or gap < worst:
                    worst, where = gap, i
            out.append((k, layer.note, worst, where))
        u = nxt
    return out


# -------------------------------------------------------------- encode / decode

def encode_input(w, spec: TransformerSpec, n: int) -> ActivationSeq:
    """Input one-hots (pads after w) plus the position encoding, laid out for ``spec``."""
    from .lang.syntax import PAD
    w = tuple(w)
    if len(w) >= n:
        raise ValueError(f"need n > |w| (got n={n}, |w|={len(w)})")
    u = build_pe(n, spec.mode, spec.layout)
    updates = {}
    padded = w + (PAD,) * (n - len(w))
    for a in padded:
        if a not in spec.input_coords:
            raise ValueError(f"symbol {a!r} has no input coordinate")
    for a, c in spec.input_coords.items():
        updates[c] = [ZERO] + [ONE if x == a else ZERO for x in padded]
    return u.with_columns(updates)


def decode_symbols(u: ActivationSeq, coords: dict) -> list:
    """Read an exact one-hot block at every real position."""
    out = []
    for i in range(u.n):
        hot = []
        for a, c in coords.items():
            v = u.at(i, c)
            if v == 1:
                hot.append(a)
            elif v != 0:
                raise DecodeError(f"position {i}: coordinate for {a!r} holds {v}")
        if len(hot) != 1:
            raise DecodeError(f"position {i}: {len(hot)} hot coordinates")
        out.append(hot[0])
    return out


def decode_output(u: ActivationSeq, spec: TransformerSpec) -> str:
    """Decode the output block and strip the trailing pads."""
    from .lang.syntax import PAD
    syms = decode_symbols(u, spec.output_coords)
    k = syms.index(PAD) if PAD in syms else len(syms)
    if any(s != PAD for s in syms[k:]):
        raise DecodeError(f"non-pad output symbol after the first pad at position {k}")
    if any(s not in spec.gamma for s in syms[:k]):
        raise DecodeError("output symbol outside the output alphabet")
    return "".join(syms[:k])


def transduce(spec: TransformerSpec, w, n: int) -> str:
    return decode_output(run(spec, encode_input(w, spec, n)), spec)


# --------------------------------------------------------------- serialization

def _fr(x: mpq) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def _rows_out(rows):
    return [[[c, _fr(v)] for c, v in row] for row in rows]


def _rows_in(rows):
    return tuple(tuple((int(c), mpq(v)) for c, v in row) for row in rows)


def spec_to_json(spec: TransformerSpec) -> str:
    layers = []
    for layer in spec.layers:
        if isinstance(layer, Ffn):
            layers.append({"type": "ffn", "note": layer.note,
                           "W1": _rows_out(layer.W1), "b1": [_fr(b) for b in layer.b1],
                           "W2": [[c, [[k, _fr(v)] for k, v in row]] for c, row in layer.W2],
                           "b2": [[c, _fr(v)] for c, v in layer.b2]})
        else:
            layers.append({"type": "attn", "note": layer.note, "mask": layer.mask,
                           "Q": _rows_out(layer.Q), "K": _rows_out(layer.K),
                           "V": [[c, [[k, _fr(v)] for k, v in row]] for c, row in layer.V],
                           "eq": list(layer.eq) if layer.eq else None})
    doc = {"format": "ahat-spec/1", "mode": spec.mode, "d": spec.d, "layout": list(spec.layout),
           "sigma": list(spec.sigma), "gamma": list(spec.gamma),
           "input": spec.input_coords, "output": spec.output_coords, "minlen": spec.minlen,
           "layers": layers}
    return json.dumps(doc, ensure_ascii=False, indent=1)


def spec_from_json(text: str) -> TransformerSpec:
    doc = json.loads(text)
    if doc.get("format") != "ahat-spec/1":
        raise ValueError("not an ahat-spec/1 document")
    layers = []
    for L in doc["layers"]:
        if L["type"] == "ffn":
            layers.append(Ffn(_rows_in(L["W1"]), tuple(mpq(b) for b in L["b1"]),
                              tuple((c, tuple((k, mpq(v)) for k, v in row)) for c, row in L["W2"]),
                              tuple((c, mpq(v)) for c, v in L["b2"]), L.get("note", "")))
        else:
            layers.append(Attn(_rows_in(L["Q"]), _rows_in(L["K"]),
                               tuple((c, tuple((k, mpq(v)) for k, v in row)) for c, row in L["V"]),
                               L["mask"], L.get("note", ""), tuple(L["eq"]) if L.get("eq") else None))
    return TransformerSpec(doc["d"], tuple(doc["layout"]), layers, doc["mode"],
                           dict(doc["input"]), dict(doc["output"]),
                           tuple(doc["sigma"]), tuple(doc["gamma"]), minlen=doc.get("minlen"))


__all__ = ["ActivationSeq", "Attn", "DecodeError", "DimensionMismatch", "Ffn", "TransformerSpec",
           "apply_layer", "build_pe", "decode_output", "encode_input", "equality_margins",
           "pe_values", "run", "spec_from_json", "spec_to_json", "transduce"]
