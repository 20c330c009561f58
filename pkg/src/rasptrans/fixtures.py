"""Built-in transducers and the RASP program corpus shipped with the package."""
from __future__ import annotations

from importlib import resources

from .fst import END, L2R, R2L, DirectedDft, Dft


def _dft(sigma, gamma, states, start, fn) -> Dft:
    """Build a DFT from ``fn(q, a) -> (output string or tuple, next state)``."""
    delta = {}
    for q in states:
        for a in tuple(sigma) + (END,):
            out, r = fn(q, a)
            delta[(q, a)] = (tuple(out), r)
    return Dft(tuple(sigma), tuple(gamma), tuple(states), start, delta)


# ----------------------------------------------------------------- acceptors

def dfa_ab_star() -> Dft:
    """Accepts (ab)*: emits nothing per symbol and 1/0 at the end."""
    nxt = {("s0", "a"): "s1", ("s1", "b"): "s0"}

    def fn(q, a):
        if a is END:
            return ("1" if q == "s0" else "0"), q
        return "", nxt.get((q, a), "dead")
    return _dft("ab", "01", ("s0", "s1", "dead"), "s0", fn)


def dfa_aa_star() -> Dft:
    """Accepts (aa)*, the textbook non-aperiodic language."""
    def fn(q, a):
        if a is END:
            return ("1" if q == "even" else "0"), q
        return "", "odd" if q == "even" else "even"
    return _dft("a", "01", ("even", "odd"), "even", fn)


# ------------------------------------------------------------- transducers

def increment_machine() -> Dft:
    """Binary +1 read least-significant bit first (use it right to left)."""
    def fn(q, a):
        if a is END:
            return "", q
        if q == "carry":
            return ("0", "carry") if a == "1" else ("1", "done")
        return a, "done"
    return _dft("01", "01", ("carry", "done"), "carry", fn)


def increment_r2l() -> DirectedDft:
    return DirectedDft(increment_machine(), R2L)


def replace_after_first_b() -> Dft:
    """Every symbol after the first b becomes c."""
    def fn(q, a):
        if a is END:
            return "", q
        if q == "q1":
            return a, ("q2" if a == "b" else "q1")
        return "c", "q2"
    return _dft("abc", "abc", ("q1", "q2"), "q1", fn)


def replace_after_first_b_cascade() -> list:
    """Two identity-reset stages: mark symbols after the first b, then relabel marks."""
    def mark(q, a):
        if a is END:
            return "", q
        out = a if q == "q1" else a.upper()
        return out, ("q2" if a == "b" else q)

    def relabel(q, a):
        if a is END:
            return "", q
        return ("c" if a.isupper() else a), q
    s1 = _dft("abc", "abcABC", ("q1", "q2"), "q1", mark)
    s2 = _dft("abcABC", "abc", ("q1", "q2"), "q1", relabel)
    return [DirectedDft(s1, L2R), DirectedDft(s2, L2R)]


def swap_machine() -> Dft:
    """Symbol a swaps the two states, so it is neither the identity nor a reset."""
    def fn(q, a):
        if a is END:
            return "", q
        r = {"q1": "q2", "q2": "q1"}[q] if a == "a" else q
        return q[-1], r
    return _dft("ab", "12", ("q1", "q2"), "q1", fn)


# Rotate-right over {a, b} as f_R after f_L.
# f_L delays by one position: it writes F at the first position, the previous
# symbol elsewhere, and at the end a marked copy of the last symbol (m for a,
# n for b). f_R reads right to left, remembers the mark and writes it at F.

_MARK = {"a": "m", "b": "n"}
_ROT_MID = ("F", "a", "b", "m", "n")


def rotate_left_machine() -> Dft:
    def fn(q, a):
        if a is END:
            return _MARK["a" if q in ("init", "pa") else "b"], q
        if q == "init":
            return "F", "p" + a
        return q[1], "p" + a
    return _dft("ab", _ROT_MID, ("init", "pa", "pb"), "init", fn)


def rotate_right_machine() -> Dft:
    """The machine of f_R, to be run right to left."""
    def fn(q, a):
        if a is END:
            return "", q
        if a in ("m", "n"):
            return "", "pa" if a == "m" else "pb"
        if a == "F":
            return q[1], q
        return a, q
    return _dft(_ROT_MID, "ab", ("pa", "pb"), "pa", fn)


def rotate_cascades() -> tuple:
    """(left cascade, right cascade) of 2-state identity-reset stages."""
    def first(q, a):
        if a is END:
            return "", q
        return (a.upper() if q == "q0" else a), "q1"

    def delay(q, a):
        if a is END:
            return _MARK[q[1]], q
        if a.isupper():
            return "F", "q" + a.lower()
        return q[1], "q" + a
    l0 = _dft("ab", "abAB", ("q0", "q1"), "q0", first)
    l1 = _dft("abAB", _ROT_MID, ("qa", "qb"), "qa", delay)
    left = [DirectedDft(l0, L2R), DirectedDft(l1, L2R)]
    right = [DirectedDft(rotate_right_machine(), R2L)]
    return left, right


def rotate_right_reference(w: str) -> str:
    return w[-1:] + w[:-1]


# ------------------------------------------------------------------ corpus

def corpus_names() -> list:
    root = resources.files(__package__) / "corpus"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".rasp"))


def corpus_text(name: str) -> str:
    return (resources.files(__package__) / "corpus" / f"{name}.rasp").read_text(encoding="utf-8")


def corpus_program(name: str):
    from .lang import parse
    return parse(corpus_text(name))
