"""Deterministic finite transducers with an end marker, pipelines, and decision procedures."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Hashable, Optional, Sequence


class _End:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "END"

    def __reduce__(self):
        return (_End, ())


END = _End()
L2R, R2L = "L2R", "R2L"


class AlphabetMismatch(ValueError):
    pass


class FstFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dft:
    """A total DFT; ``delta[(q, a)] = (outputs, r)`` with ``a`` in Σ or END."""
    sigma: tuple
    gamma: tuple
    states: tuple
    start: Hashable
    delta: dict = field(repr=False)

    def __post_init__(self):
        if END in self.sigma:
            raise ValueError("the end marker cannot be an input symbol")
        if self.start not in self.states:
            raise ValueError("start state is not a state")
        gam = set(self.gamma)
        for q in self.states:
            for a in tuple(self.sigma) + (END,):
                if (q, a) not in self.delta:
                    raise ValueError(f"delta is not total: missing ({q!r}, {a!r})")
                out, r = self.delta[(q, a)]
                if r not in self.states:
                    raise ValueError(f"delta({q!r}, {a!r}) targets unknown state {r!r}")
                if any(b not in gam for b in out):
                    raise ValueError(f"delta({q!r}, {a!r}) emits a symbol outside gamma")

    def step(self, q, a):
        return self.delta[(q, a)]

    def state_map(self, a) -> tuple:
        """Image of each state (in ``states`` order) under symbol ``a``."""
        return tuple(self.delta[(q, a)][1] for q in self.states)

    def transduce(self, w: Sequence) -> tuple:
        q, out = self.start, []
        for a in w:
            if a not in self._sigma_set:
                raise AlphabetMismatch(f"symbol {a!r} is not in the input alphabet")
            o, q = self.delta[(q, a)]
            out.extend(o)
        o, _ = self.delta[(q, END)]
        out.extend(o)
        return tuple(out)

    @property
    def _sigma_set(self):
        s = self.__dict__.get("_ss")
        if s is None:
            s = frozenset(self.sigma)
            object.__setattr__(self, "_ss", s)
        return s


def _as_output(seq: tuple, like):
    if isinstance(like, str) and all(isinstance(x, str) for x in seq):
        return "".join(seq)
    return seq


def run_dft(t: Dft, w):
    """Transduce ``w``; strings in give strings out when every symbol is a string."""
    return _as_output(t.transduce(tuple(w)), w)


@dataclass(frozen=True)
class DirectedDft:
    machine: Dft
    direction: str = L2R

    def __post_init__(self):
        if self.direction not in (L2R, R2L):
            raise ValueError(f"direction must be L2R or R2L, not {self.direction!r}")

    @property
    def sigma(self):
        return self.machine.sigma

    @property
    def gamma(self):
        return self.machine.gamma

    def transduce(self, w: Sequence) -> tuple:
        if self.direction == L2R:
            return self.machine.transduce(w)
        return tuple(reversed(self.machine.transduce(tuple(reversed(tuple(w))))))


def run_directed(s: DirectedDft, w):
    return _as_output(s.transduce(tuple(w)), w)


@dataclass(frozen=True)
class Pipeline:
    stages: tuple = ()
    components: Optional[tuple] = None  # names of tuple coordinates of the final alphabet

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        for k in range(len(self.stages) - 1):
            a, b = self.stages[k], self.stages[k + 1]
            if set(a.gamma) != set(b.sigma):
                raise AlphabetMismatch(f"stage {k} output alphabet differs from stage {k + 1} input alphabet")

    def __add__(self, other: "Pipeline") -> "Pipeline":
        return Pipeline(self.stages + other.stages, other.components or self.components)

    def transduce(self, w: Sequence) -> tuple:
        w = tuple(w)
        for s in self.stages:
            w = s.transduce(w)
        return w

    def project(self, w: Sequence, component: str) -> tuple:
        idx = self.components.index(component)
        return tuple(x[idx] for x in self.transduce(w))


def run_pipeline(p: Pipeline, w):
    return _as_output(p.transduce(tuple(w)), w)


# ------------------------------------------------------------- constructors

def identity_dft(sigma: Sequence) -> Dft:
    sigma = tuple(sigma)
    delta = {(0, a): ((a,), 0) for a in sigma}
    delta[(0, END)] = ((), 0)
    return Dft(sigma, sigma, (0,), 0, delta)


def compose_dft(t1: Dft, t2: Dft) -> Dft:
    """Sequential composition ``t2 ∘ t1`` as a product machine (both left to right)."""
    if not set(t1.gamma) <= set(t2.sigma):
        raise AlphabetMismatch("t1's outputs are not inputs of t2")
    states = tuple(product(t1.states, t2.states))
    delta = {}
    for (q1, q2) in states:
        for a in t1.sigma:
            u, r1 = t1.delta[(q1, a)]
            out, r2 = [], q2
            for b in u:
                o, r2 = t2.delta[(r2, b)]
                out.extend(o)
            delta[((q1, q2), a)] = (tuple(out), (r1, r2))
        u, r1 = t1.delta[(q1, END)]
        out, r2 = [], q2
        for b in u:
            o, r2 = t2.delta[(r2, b)]
            out.extend(o)
        o, r2 = t2.delta[(r2, END)]
        out.extend(o)
        delta[((q1, q2), END)] = (tuple(out), (r1, r2))
    return Dft(t1.sigma, t2.gamma, states, (t1.start, t2.start), delta)


# ------------------------------------------------------- decision procedures

@dataclass(frozen=True)
class Aperiodic:
    monoid_size: int

    def __bool__(self):
        return True


@dataclass(frozen=True)
class Periodic:
    """``word``'s state map m satisfies m^k = m^(k+period) with period > 1, so m^k != m^(k+1)."""
    word: tuple
    k: int
    period: int
    monoid_size: int

    def __bool__(self):
        return False


def _compose(m1: tuple, m2: tuple) -> tuple:
    """First apply m1, then m2 (maps as tuples of state indices)."""
    return tuple(m2[x] for x in m1)


def _power(m: tuple, k: int) -> tuple:
    r = tuple(range(len(m)))
    for _ in range(k):
        r = _compose(r, m)
    return r


def _index_period(m: tuple):
    seen, cur, k = {}, tuple(range(len(m))), 0
    while cur not in seen:
        seen[cur] = k
        cur = _compose(cur, m)
        k += 1
    start = seen[cur]
    return start, k - start


def transition_monoid(t: Dft):
    """All state maps reachable from the identity, each labeled with a shortest word."""
    idx = {q: i for i, q in enumerate(t.states)}
    gens = [(a, tuple(idx[t.delta[(q, a)][1]] for q in t.states)) for a in t.sigma]
    ident = tuple(range(len(t.states)))
    words = {ident: ()}
    queue = deque([ident])
    while queue:
        m = queue.popleft()
        for a, g in gens:
            m2 = _compose(m, g)
            if m2 not in words:
                words[m2] = words[m] + (a,)
                queue.append(m2)
    return words


def is_aperiodic(t: Dft):
    """Aperiodic iff every monoid element satisfies m^|Q| = m^(|Q|+1)."""
    words = transition_monoid(t)
    nq = len(t.states)
    for m, w in words.items():
        if _power(m, nq) != _power(m, nq + 1):
            start, period = _index_period(m)
            return Periodic(w, max(start, 1), period, len(words))
    return Aperiodic(len(words))


def aperiodic_by_definition(t: Dft, max_len: int = 4) -> bool:
    """Definitional check over words up to ``max_len`` and exponents up to 2|Q|."""
    idx = {q: i for i, q in enumerate(t.states)}
    gens = {a: tuple(idx[t.delta[(q, a)][1]] for q in t.states) for a in t.sigma}
    bound = 2 * len(t.states)
    for length in range(1, max_len + 1):
        for w in product(t.sigma, repeat=length):
            m = tuple(range(len(t.states)))
            for a in w:
                m = _compose(m, gens[a])
            if not any(_power(m, k) == _power(m, k + 1) for k in range(bound + 1)):
                return False
    return True


def is_identity_reset(t: Dft) -> bool:
    for a in t.sigma:
        m = t.state_map(a)
        if m != tuple(t.states) and len(set(m)) != 1:
            return False
    return True


# ------------------------------------------------------------- text format

def _jdump(x) -> str:
    if x is END:
        return "END"
    return json.dumps(_to_json(x), ensure_ascii=False)


def _to_json(x):
    if isinstance(x, tuple):
        return [_to_json(y) for y in x]
    return x


def _from_json(x):
    if isinstance(x, list):
        return tuple(_from_json(y) for y in x)
    return x


def dft_to_text(t: Dft) -> str:
    lines = ["sigma: " + _jdump(tuple(t.sigma)), "gamma: " + _jdump(tuple(t.gamma)),
             "states: " + _jdump(tuple(t.states)), "start: " + _jdump(t.start)]
    for q in t.states:
        for a in tuple(t.sigma) + (END,):
            out, r = t.delta[(q, a)]
            if all(isinstance(b, str) and len(b) == 1 for b in out):
                o = json.dumps("".join(out), ensure_ascii=False)
            else:
                o = _jdump(tuple(out))
            lines.append(f"delta: {_jdump(q)}, {_jdump(a)} -> {o}, {_jdump(r)}")
    return "\n".join(lines) + "\n"


class _Cursor:
    def __init__(self, s: str, lineno: int):
        self.s, self.i, self.lineno = s, 0, lineno
        self.dec = json.JSONDecoder()

    def ws(self):
        while self.i < len(self.s) and self.s[self.i] in " \t":
            self.i += 1

    def value(self, allow_end=False):
        self.ws()
        if allow_end and self.s.startswith("END", self.i):
            self.i += 3
            return END
        try:
            v, self.i = self.dec.raw_decode(self.s, self.i)
        except json.JSONDecodeError as exc:
            raise FstFormatError(f"line {self.lineno}: {exc.msg}") from None
        return _from_json(v)

    def lit(self, text):
        self.ws()
        if not self.s.startswith(text, self.i):
            raise FstFormatError(f"line {self.lineno}: expected {text!r}")
        self.i += len(text)


def _parse_dft_lines(lines) -> Dft:
    head, delta = {}, {}
    for lineno, line in lines:
        key, _, rest = line.partition(":")
        key = key.strip()
        if key == "delta":
            c = _Cursor(rest, lineno)
            q = c.value()
            c.lit(",")
            a = c.value(allow_end=True)
            c.lit("->")
            out = c.value()
            c.lit(",")
            r = c.value()
            c.ws()
            if c.i != len(c.s):
                raise FstFormatError(f"line {lineno}: trailing text")
            out = tuple(out) if isinstance(out, (str, tuple)) else (out,)
            if (q, a) in delta:
                raise FstFormatError(f"line {lineno}: duplicate transition")
            delta[(q, a)] = (out, r)
        elif key in ("sigma", "gamma", "states", "start"):
            head[key] = _Cursor(rest, lineno).value()
        else:
            raise FstFormatError(f"line {lineno}: unknown key {key!r}")
    missing = {"sigma", "gamma", "states", "start"} - set(head)
    if missing:
        raise FstFormatError("missing header(s): " + ", ".join(sorted(missing)))
    try:
        return Dft(tuple(head["sigma"]), tuple(head["gamma"]), tuple(head["states"]),
                   head["start"], delta)
    except ValueError as exc:
        raise FstFormatError(str(exc)) from None


def _content_lines(text: str):
    for k, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s and not s.startswith("#"):
            yield k, s


def dft_from_text(text: str) -> Dft:
    return _parse_dft_lines(list(_content_lines(text)))


def pipeline_to_text(p: Pipeline) -> str:
    out = [f"pipeline: {len(p.stages)}"]
    if p.components is not None:
        out.append("components: " + _jdump(tuple(p.components)))
    for k, s in enumerate(p.stages):
        out.append(f"stage: {k}")
        out.append(f"dir: {s.direction}")
        out.append(dft_to_text(s.machine).rstrip("\n"))
        out.append("end")
    return "\n".join(out) + "\n"


def pipeline_from_text(text: str) -> Pipeline:
    lines = list(_content_lines(text))
    if not lines or not lines[0][1].startswith("pipeline:"):
        raise FstFormatError("expected 'pipeline:' header")
    count = int(lines[0][1].split(":", 1)[1])
    k, components = 1, None
    if k < len(lines) and lines[k][1].startswith("components:"):
        components = tuple(_Cursor(lines[k][1].split(":", 1)[1], lines[k][0]).value())
        k += 1
    stages = []
    while k < len(lines):
        if not lines[k][1].startswith("stage:"):
            raise FstFormatError(f"line {lines[k][0]}: expected 'stage:'")
        k += 1
        direction = lines[k][1].split(":", 1)[1].strip()
        k += 1
        block = []
        while k < len(lines) and lines[k][1] != "end":
            block.append(lines[k])
            k += 1
        if k == len(lines):
            raise FstFormatError("unterminated stage")
        k += 1
        stages.append(DirectedDft(_parse_dft_lines(block), direction))
    if len(stages) != count:
        raise FstFormatError(f"header announces {count} stages, found {len(stages)}")
    return Pipeline(tuple(stages), components)


def load(path) -> object:
    """Load a DFT or a pipeline file, deciding by its first line."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    first = next(_content_lines(text), (0, ""))[1]
    return pipeline_from_text(text) if first.startswith("pipeline:") else dft_from_text(text)
