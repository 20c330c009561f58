import pytest

from conftest import GOLDEN_CASES, golden_rows
from rasptrans.cli import main
from rasptrans.fixtures import corpus_program
from rasptrans.interp import render_trace, trace


@pytest.mark.parametrize("stem", sorted(GOLDEN_CASES))
def test_trace_matches_golden(stem):  # [PAPER] table rows, cell for cell
    name, w, n = GOLDEN_CASES[stem]
    got, gold = golden_rows(stem, render_trace(trace(corpus_program(name), w, n, strict=False)))
    assert got == gold


@pytest.mark.parametrize("stem", sorted(GOLDEN_CASES))
def test_cli_trace_matches_golden(stem, capsys):
    name, w, n = GOLDEN_CASES[stem]
    argv = ["trace", name, w] + (["--n", str(n), "--force-n"] if n else [])
    assert main(argv) == 0
    got, gold = golden_rows(stem, capsys.readouterr().out)
    assert got == gold


def test_trace_is_stable():
    p = corpus_program("marked-square")
    assert render_trace(trace(p, "aab", 14)) == render_trace(trace(p, "aab", 14))


def test_output_rows():  # [PAPER] out rows of three tables
    assert trace(corpus_program("increment"), "01011").rows["out"] == list("01100")
    assert "".join(trace(corpus_program("marked-square"), "aab", 14).rows["out"]) == "|Aab|AAb|AAB|_"
    assert trace(corpus_program("majority-rules"), "bbabbaba", 10).rows["out"][:8] == ["b"] * 8
