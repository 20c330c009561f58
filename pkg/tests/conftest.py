import itertools
from pathlib import Path

import pytest

from rasptrans.fixtures import corpus_program
from rasptrans.interp import minimum_length
from rasptrans.lang import typecheck

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
FIXTURES = HERE / "fixtures"


def words(sigma, maxlen):
    for length in range(maxlen + 1):
        for w in itertools.product(sigma, repeat=length):
            yield "".join(w)


def padded_lengths(p, ell, offsets=(1, 2)):
    q = minimum_length(p, ell)
    return [max(q, ell) + k for k in offsets]


@pytest.fixture
def corpus():
    return lambda name: typecheck(corpus_program(name))


# golden file stem -> (corpus program, input, n); n below q(|w|) runs non-strictly
GOLDEN_CASES = {
    "table1_increment": ("increment", "01011", None),
    "table2_rotate-right": ("rotate-right", "abcbbac", None),
    "table3_map-reverse": ("map-reverse", "|ab|cde|", None),
    "table4_map-duplicate": ("map-duplicate", "|ab|cde|", None),
    "copy-first-half": ("copy-first-half", "abcaabcbb", None),
    "table5_homomorphism-srasp": ("homomorphism-srasp", "ABBC", 6),
    "table6_marked-square": ("marked-square", "aab", 14),
    "table7_majority-rules": ("majority-rules", "bbabbaba", 10),
}


def golden_rows(stem, text):
    """The rows of ``text`` (a rendered trace) named in the golden file, in golden order."""
    gold = (GOLDEN / f"{stem}.tsv").read_text(encoding="utf-8")
    rows = {ln.split("\t")[0]: ln for ln in text.splitlines()}
    got = "".join(rows.get(ln.split("\t")[0], "<missing>") + "\n" for ln in gold.splitlines())
    return got, gold


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.summary_lines():
            terminalreporter.write_line(line)
