import pytest
from hypothesis import given, settings, strategies as st

from rasptrans.fixtures import corpus_program
from rasptrans.interp import (
    MalformedOutput, VectorLengthError, extract_output, render_trace, run, trace,
)
from rasptrans.lang import parse, typecheck

MASKS = {"true": lambda i, j: True, "j<i": lambda i, j: j < i, "j<=i": lambda i, j: j <= i,
         "j>i": lambda i, j: j > i, "j>=i": lambda i, j: j >= i}


def brute_attention(w, choice, mask, target, default):
    """Reference: pick min/max unmasked j with w[j] == target, else default."""
    out = []
    for i in range(len(w)):
        js = [j for j in range(len(w)) if MASKS[mask](i, j) and w[j] == target]
        if not js:
            out.append(default)
        else:
            out.append(w[min(js) if choice == "leftmost" else max(js)])
    return "".join(out)


@settings(max_examples=150, deadline=None)
@given(st.text("abc", max_size=7), st.sampled_from(list(MASKS)),
       st.sampled_from(["leftmost", "rightmost"]), st.sampled_from("abc"))
def test_attention_semantics(w, mask, choice, target):  # [DERIVED] brute-force selection
    p = parse(f"dialect: brasp\nsigma: a b c\ngamma: a b c\nio: length\n"
              f"out(i) = {choice} j [{mask}, in(j) = '{target}'] in(j) : 'c';")
    assert run(p, w) == brute_attention(w, choice, mask, target, "c")


def test_attention_picks_position_not_value():
    # leftmost among matches returns the value at the chosen j
    p = parse("dialect: brasp_pos\nsigma: a b\ngamma: a b\nio: length\n"
              "x(i) = leftmost j [true, in(j) = 'b'] pos(j) : 0;\n"
              "out(i) = 'a' if x(i) = 1 else 'b';")
    assert run(p, "ab") == "aa"
    assert run(p, "bb") == "bb"


def test_increment_table():  # [PAPER] 01011 -> 01100
    assert run(corpus_program("increment"), "01011") == "01100"


def test_identity():  # [TRIVIAL]
    assert run(corpus_program("identity"), "abc") == "abc"


def test_marked_square_table():  # [PAPER] aab, n=14
    assert run(corpus_program("marked-square"), "aab", 14) == "|Aab|AAb|AAB|"


def test_clipping_per_node():
    # (pos + pos) - pos clips the inner sum first: at i = n-1 the result is n-1 - (n-1) = 0
    p = parse("dialect: brasp_pos\nsigma: a\ngamma: a b\nio: length\n"
              "s(i) = (pos(i) + pos(i)) - pos(i);\n"
              "out(i) = 'a' if s(i) = pos(i) else 'b';")
    t = trace(p, "aaaa")
    assert t.rows["s"] == [0, 1, 1, 0]  # [DERIVED] min(2i, 3) - i
    assert t.rows["out"] == ["a", "a", "b", "b"]


def test_prefix_sum_clipped():
    p = corpus_program("majority-rules")
    t = trace(p, "aaaa", 5)
    assert t.rows["pa"] == [1, 2, 3, 4, 4]  # [TRIVIAL] running count capped at n-1 = 4


def test_subtraction_floor():
    p = parse("dialect: brasp_pos\nsigma: a\ngamma: a b\nio: length\n"
              "s(i) = 0 - pos(i);\nout(i) = 'a' if s(i) = 0 else 'b';")
    assert run(p, "aaa") == "aaa"


def test_padded_needs_room():
    p = corpus_program("marked-square")
    with pytest.raises(VectorLengthError):
        run(p, "aab", 13)  # q(3) = 13
    with pytest.raises(VectorLengthError):
        run(p, "aab", 3, strict=False)  # n must exceed |w| regardless


def test_force_n_reproduces_short_table():  # [PAPER] homomorphism table uses n=6 < q
    p = corpus_program("homomorphism-srasp")
    with pytest.raises(VectorLengthError):
        run(p, "ABBC", 6)
    assert run(p, "ABBC", 6, strict=False) == "aaccd"


def test_default_n_for_padded():
    p = corpus_program("majority-rules")
    assert run(p, "ab") == "aa"


def test_length_convention_rejects_other_n():
    with pytest.raises(VectorLengthError):
        run(corpus_program("identity"), "ab", 5)


def test_packed_output():  # [PAPER] a -> aa, b -> ccb
    assert run(corpus_program("homomorphism-packed"), "ab") == "aaccb"
    assert run(corpus_program("copy-first-half"), "abcaabcbb") == "abca"


def test_padded_extraction_rules():
    p = typecheck(corpus_program("majority-rules")).program
    assert extract_output(p, ["a", "b", "_", "_"]) == "ab"
    with pytest.raises(MalformedOutput):
        extract_output(p, ["a", "_", "b", "_"])


def test_residues_mod_3_trace():  # [DERIVED] i mod 3
    t = trace(corpus_program("residues-mod-3"), "abababab")
    assert t.rows["out"] == list("01201201")


def test_trace_tsv_shape():
    text = render_trace(trace(corpus_program("increment"), "01011"))
    lines = text.splitlines()
    assert lines[0] == "in\t0\t1\t0\t1\t1"
    assert lines[-1] == "out\t0\t1\t1\t0\t0"
    assert all("$" not in ln.split("\t")[0] for ln in lines)


def test_trace_markdown_escapes_bar():
    md = render_trace(trace(corpus_program("map-reverse"), "|a|"), "markdown")
    assert "\\|" in md


def test_empty_input():
    assert run(corpus_program("identity"), "") == ""
    assert run(corpus_program("marked-square"), "") == "|"


@settings(max_examples=40, deadline=None)
@given(st.text("ab", max_size=5), st.integers(1, 3))
def test_padded_output_stable_in_n(w, extra):
    # the output does not depend on how much padding follows the input
    p = corpus_program("marked-square")
    q = len(w) * (len(w) + 1) + 1
    assert run(p, w, q + extra) == run(p, w, q + 1)
