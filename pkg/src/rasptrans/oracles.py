"""Reference transductions written directly from their informal descriptions.

None of these functions touch the parser, interpreter or lowering code, so
they can serve as ground truth for every backend.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional


@dataclass(frozen=True)
class Oracle:
    name: str
    fn: Callable[[str], str]
    sigma: tuple
    gamma: tuple
    # inputs outside the domain are skipped (the transduction is only specified on it)
    domain: Optional[Callable[[str], bool]] = None
    maxlen: int = 6

    def __call__(self, w: str) -> str:
        return self.fn(w)

    def accepts(self, w: str) -> bool:
        return self.domain is None or self.domain(w)


def increment(w: str) -> str:
    """Add one to a big-endian binary numeral, keeping the width (overflow wraps)."""
    if not w:
        return ""
    value = (int(w, 2) + 1) % (1 << len(w))
    return format(value, f"0{len(w)}b")


def rotate_right(w: str) -> str:
    return w[-1:] + w[:-1]


def identity(w: str) -> str:
    return w


def homomorphism(h: dict) -> Callable[[str], str]:
    return lambda w: "".join(h[a] for a in w)


def bracketed(w: str) -> bool:
    """Nonempty, starts and ends with a bar."""
    return len(w) >= 1 and w[0] == "|" and w[-1] == "|"


def _blocks(w: str, fn) -> str:
    parts = w.split("|")
    return "|".join(fn(p) for p in parts)


def map_reverse(w: str) -> str:
    """Reverse every block between bars."""
    return _blocks(w, lambda s: s[::-1])


def map_duplicate(w: str) -> str:
    """Write every block between bars twice."""
    return _blocks(w, lambda s: s + s)


def copy_first_half(w: str) -> str:
    return w[: len(w) // 2]


def residues(m: int) -> Callable[[str], str]:
    return lambda w: "".join(str(i % m) for i in range(len(w)))


def marked_square(w: str) -> str:
    """|w| copies of w, the k-th with its first k symbols uppercased, each after a bar."""
    pieces = ["|" + w[:k].upper() + w[k:] for k in range(1, len(w) + 1)]
    return "".join(pieces) + "|"


def majority_rules(w: str) -> str:
    winner = "a" if w.count("a") >= w.count("b") else "b"
    return winner * len(w)


def count_mod(m: int) -> Callable[[str], str]:
    """Running digit sum modulo m."""
    def fn(w: str) -> str:
        out, s = [], 0
        for a in w:
            s = (s + int(a)) % m
            out.append(str(s))
        return "".join(out)
    return fn


_BAR = tuple("abcdefg|")

ORACLES = {
    "identity": Oracle("identity", identity, tuple("abc"), tuple("abc")),
    "increment": Oracle("increment", increment, ("0", "1"), ("0", "1"), maxlen=8),
    "rotate-right": Oracle("rotate-right", rotate_right, tuple("abc"), tuple("abc")),
    "homomorphism-packed": Oracle("homomorphism-packed", homomorphism({"a": "aa", "b": "ccb"}),
                                  tuple("ab"), tuple("abc")),
    "map-reverse": Oracle("map-reverse", map_reverse, _BAR, _BAR, bracketed),
    "map-duplicate": Oracle("map-duplicate", map_duplicate, _BAR, _BAR, bracketed),
    "copy-first-half": Oracle("copy-first-half", copy_first_half, tuple("abc"), tuple("abc")),
    "residues-mod-2": Oracle("residues-mod-2", residues(2), tuple("ab"), tuple("01")),
    "residues-mod-3": Oracle("residues-mod-3", residues(3), tuple("ab"), tuple("012")),
    "residues-mod-5": Oracle("residues-mod-5", residues(5), tuple("ab"), tuple("01234")),
    "homomorphism-srasp": Oracle("homomorphism-srasp", homomorphism({"A": "aa", "B": "", "C": "ccd"}),
                                 tuple("ABC"), tuple("acd"), maxlen=5),
    "marked-square": Oracle("marked-square", marked_square, tuple("ab"), tuple("abAB|"), maxlen=4),
    "majority-rules": Oracle("majority-rules", majority_rules, tuple("ab"), tuple("ab")),
    "count-mod-3": Oracle("count-mod-3", count_mod(3), tuple("012"), tuple("012")),
}


class MissingOracle(KeyError):
    pass


def get(name: str) -> Oracle:
    try:
        return ORACLES[name]
    except KeyError:
        raise MissingOracle(f"no oracle registered for {name!r}") from None
