import pytest
from hypothesis import given, settings, strategies as st

from conftest import padded_lengths, words
from rasptrans import fixtures as fx
from rasptrans.fixtures import corpus_program
from rasptrans.fst import L2R, DirectedDft
from rasptrans.interp import run
from rasptrans.lang import Dialect, IoConvention, parse
from rasptrans.lower import (
    CascadeMismatch, LoweringError, NotIdentityReset, arational_to_brasp, brasp_to_pipeline,
    cascade_to_brasp, check_pipeline_aperiodic, compose_mapduplicate, compose_mapreverse,
    hom_to_srasp, pipeline_output, srasp_compose, unpack_packed,
)
from rasptrans.oracles import homomorphism, increment

IDENT_SEP = parse("dialect: brasp\nsigma: a b |\ngamma: a b |\nio: length\nout(i) = in(i);")


def segments(w, fn):
    return "|".join(fn(s) for s in w.split("|"))


# ------------------------------------------------------------ B-RASP -> pipeline

def test_increment_pipeline_shape():
    pl = brasp_to_pipeline(corpus_program("increment"))
    assert len(pl.stages) == 4  # input wrapper + not, carry, out
    assert pl.components == ("in", "not", "carry", "out")
    assert all(check_pipeline_aperiodic(pl))


@pytest.mark.parametrize("name", ["increment", "rotate-right"])
def test_pipeline_matches_interp(name):
    p = corpus_program(name)
    pl = brasp_to_pipeline(p)
    for w in words(p.sigma, 6 if len(p.sigma) == 2 else 5):
        assert pipeline_output(pl, w) == run(p, w)


def test_pipeline_increment_oracle():  # [DERIVED] binary increment
    pl = brasp_to_pipeline(corpus_program("increment"))
    for w in words("01", 7):
        assert pipeline_output(pl, w) == increment(w)


def test_pipeline_stages_aperiodic_rotate():
    assert all(check_pipeline_aperiodic(brasp_to_pipeline(corpus_program("rotate-right"))))


def test_pipeline_rejects_richer_dialect():
    with pytest.raises(LoweringError):
        brasp_to_pipeline(corpus_program("residues-mod-3"))


# ------------------------------------------------------------ cascades -> B-RASP

def test_cascade_replace_after_first_b():
    base = parse("dialect: brasp\nsigma: a b c\ngamma: a b c\nio: length\nout(i) = in(i);")
    p = cascade_to_brasp(base, fx.replace_after_first_b_cascade())
    t = fx.replace_after_first_b()
    for w in words("abc", 6):
        assert run(p, w) == "".join(t.transduce(tuple(w)))


def test_arational_rotate_right():  # [DERIVED] rotate oracle
    left, right = fx.rotate_cascades()
    p = arational_to_brasp(fx.rotate_left_machine(), fx.rotate_right_machine(), (left, right))
    assert p.dialect is Dialect.BRASP and p.io is IoConvention.PACKED
    for w in words("ab", 7):
        assert run(p, w) == fx.rotate_right_reference(w)


def test_cascade_rejects_non_reset_stage():
    base = parse("dialect: brasp\nsigma: a b\ngamma: a b\nio: length\nout(i) = in(i);")
    with pytest.raises(NotIdentityReset) as e:
        cascade_to_brasp(base, [DirectedDft(fx.swap_machine(), L2R)])
    assert e.value.index == 0


def test_cascade_mismatch_detected():
    left, right = fx.rotate_cascades()
    with pytest.raises(CascadeMismatch) as e:
        arational_to_brasp(fx.rotate_left_machine(), fx.rotate_right_machine(), (left[:1], right))
    assert e.value.which == "left"


# ------------------------------------------------------------ separator maps

def test_mapreverse_examples():  # [PAPER] |ab|cde| style example over {a, b}
    p = compose_mapreverse(IDENT_SEP)
    assert run(p, "|ab|aab|") == "|ba|baa|"
    assert run(p, "ab") == "ba"


def test_mapduplicate_examples():
    p = compose_mapduplicate(IDENT_SEP)
    assert run(p, "|ab|a|") == "|abab|aa|"
    assert run(p, "ab|") == "abab|"


def test_mapreverse_exhaustive():  # [DERIVED] split/reverse/join
    p = compose_mapreverse(IDENT_SEP)
    for w in words("ab|", 7):
        assert run(p, w) == segments(w, lambda s: s[::-1]), w


def test_mapduplicate_exhaustive():  # [DERIVED] split/double/join
    p = compose_mapduplicate(IDENT_SEP)
    for w in words("ab|", 6):
        assert run(p, w) == segments(w, lambda s: s + s), w


def test_mapreverse_after_increment_like_program():
    # composition with a non-trivial first program: swap a and b
    swap = parse("dialect: brasp\nsigma: a b |\ngamma: a b |\nio: length\n"
                 "out(i) = 'b' if in(i) = 'a' else ('a' if in(i) = 'b' else '|');")
    p = compose_mapreverse(swap)
    tr = str.maketrans("ab", "ba")
    for w in words("ab|", 5):
        assert run(p, w) == segments(w.translate(tr), lambda s: s[::-1])


# ------------------------------------------------------------ S-RASP

def test_hom_table_example():  # [PAPER] A -> aa, B -> empty, C -> ccd on ABBC
    h = {"A": "aa", "B": "", "C": "ccd"}
    p = hom_to_srasp(h, gamma="acd")
    for n in padded_lengths(p, 4):
        assert run(p, "ABBC", n) == "aaccd"


@settings(max_examples=25, deadline=None)
@given(st.dictionaries(st.sampled_from("AB"), st.text("xy", max_size=3), min_size=2, max_size=2),
       st.text("AB", max_size=4))
def test_hom_random(h, w):  # [DERIVED] direct homomorphism
    p = hom_to_srasp(h, sigma="AB", gamma="xy")
    for n in padded_lengths(p, len(w)):
        assert run(p, w, n) == homomorphism(h)(w)


def test_srasp_compose_two_homs():
    h1 = {"A": "aa", "B": "", "C": "ccd"}
    h2 = {"a": "x", "c": "yy", "d": ""}
    p = srasp_compose(hom_to_srasp(h1, gamma="acd"), hom_to_srasp(h2, sigma="acd", gamma="xy"))
    for w in words("ABC", 3):
        for n in padded_lengths(p, len(w)):
            assert run(p, w, n) == homomorphism(h2)(homomorphism(h1)(w))


def test_srasp_compose_alphabet_check():
    with pytest.raises(LoweringError):
        srasp_compose(corpus_program("marked-square"), corpus_program("homomorphism-srasp"))


@pytest.mark.parametrize("name,sigma,maxlen", [
    ("homomorphism-packed", "ab", 4), ("copy-first-half", "abc", 4), ("increment", "01", 4)])
def test_unpack_packed(name, sigma, maxlen):
    src = corpus_program(name)
    p = unpack_packed(src)
    assert p.dialect is Dialect.SRASP and p.io is IoConvention.PADDED
    for w in words(sigma, maxlen):
        for n in padded_lengths(p, len(w)):
            assert run(p, w, n) == run(src, w)
