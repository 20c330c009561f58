import json
import shutil
import subprocess
import sys

import pytest

from conftest import FIXTURES
from rasptrans.cli import EXIT_FAIL, EXIT_OK, EXIT_SYNTAX, EXIT_TYPE, main
from rasptrans.fst import Pipeline, load as load_fst


def cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ------------------------------------------------------------ run / trace / check

@pytest.mark.parametrize("argv,expected", [
    (("run", "increment", "01011"), "01100"),                       # [PAPER]
    (("run", "identity", "abc"), "abc"),                            # [TRIVIAL]
    (("run", "marked-square", "aab", "--n", "14"), "|Aab|AAb|AAB|"),  # [PAPER]
    (("run", "homomorphism-srasp", "ABBC", "--n", "6", "--force-n"), "aaccd"),
    (("run", "map-reverse", "|,a,b,|", "--sep", ","), "|ba|"),
])
def test_run(capsys, argv, expected):
    code, out, _ = cli(capsys, *argv)
    assert code == EXIT_OK and out.strip() == expected


def test_run_rejects_short_n(capsys):
    code, _, err = cli(capsys, "run", "marked-square", "aab", "--n", "13")
    assert code == EXIT_FAIL and err


def test_trace_residues(capsys):  # [DERIVED] i mod 3
    code, out, _ = cli(capsys, "trace", "residues-mod-3", "abababab")
    row = [ln for ln in out.splitlines() if ln.startswith("out\t")][0]
    assert row.split("\t")[1:] == list("01201201")


def test_trace_markdown_and_fresh(capsys):
    _, plain, _ = cli(capsys, "trace", "residues-mod-3", "ab")
    _, fresh, _ = cli(capsys, "trace", "residues-mod-3", "ab", "--show-fresh")
    assert "$" not in plain and "$" in fresh
    _, md, _ = cli(capsys, "trace", "increment", "01", "--format", "markdown")
    assert md.startswith("|")


def test_check(capsys):
    code, out, _ = cli(capsys, "check", "majority-rules", "-v")
    assert code == EXIT_OK and out.startswith("ok: majority-rules") and "pa:" in out


def test_syntax_error_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.rasp"
    f.write_text("dialect: brasp\nsigma: a\ngamma: a\nio: length\nout(i) = in(i)\n")
    code, _, err = cli(capsys, "check", str(f))
    assert code == EXIT_SYNTAX and "syntax error" in err


def test_type_error_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.rasp"
    f.write_text("dialect: brasp\nsigma: a\ngamma: a\nio: length\nout(i) = pos(i);\n")
    code, _, err = cli(capsys, "run", str(f), "a")
    assert code == EXIT_TYPE and "type error" in err


# ------------------------------------------------------------ lower

def test_lower_fst(tmp_path, capsys):  # [DERIVED] one stage per definition plus the input stage
    out = tmp_path / "inc.pipeline"
    assert cli(capsys, "lower", "increment", "--target", "fst", "-o", str(out))[0] == EXIT_OK
    pl = load_fst(out)
    assert isinstance(pl, Pipeline) and len(pl.stages) == 4
    code, text, _ = cli(capsys, "run", str(out), "01011")
    assert code == EXIT_OK and text.strip() == "01100"


@pytest.mark.parametrize("name,mode,w,expected", [
    ("identity", "B", "cab", "cab"),                 # [TRIVIAL]
    ("majority-rules", "C", "bbabbaba", "bbbbbbbb"),  # [PAPER]
])
def test_lower_aha(tmp_path, capsys, name, mode, w, expected):
    out = tmp_path / f"{name}.ahat.json"
    assert cli(capsys, "lower", name, "--target", "aha", "--pe-mode", mode, "-o", str(out))[0] == 0
    doc = json.loads(out.read_text())
    assert doc["mode"] == mode
    code, text, _ = cli(capsys, "run", str(out), w)
    assert code == EXIT_OK and text.strip() == expected


def test_lower_srasp(capsys):
    code, out, _ = cli(capsys, "lower", "homomorphism-packed", "--target", "srasp")
    assert code == EXIT_OK and "dialect: srasp" in out


def test_lower_fst_rejects_srasp(capsys):
    assert cli(capsys, "lower", "majority-rules", "--target", "fst")[0] == EXIT_FAIL


# ------------------------------------------------------------ verify

def test_verify_pass(capsys):
    code, out, _ = cli(capsys, "verify", "increment", "--against", "all", "--maxlen", "4")
    assert code == EXIT_OK and out.startswith("PASS increment: 31 inputs")
    assert "fst" in out and "aha[B]" in out and "aha[C]" in out


def test_verify_json(capsys):
    code, out, _ = cli(capsys, "verify", "majority-rules", "--maxlen", "3", "--json")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["ok"] and doc["inputs"] == 15


def test_verify_env_maxlen(capsys, monkeypatch):
    monkeypatch.setenv("RASP_MAXLEN", "2")
    code, out, _ = cli(capsys, "verify", "increment", "--maxlen", "7", "--json")
    assert code == EXIT_OK and json.loads(out)["inputs"] == 7


def test_verify_missing_oracle(tmp_path, capsys):
    f = tmp_path / "nameless.rasp"
    f.write_text("dialect: brasp\nsigma: a\ngamma: a\nio: length\nout(i) = in(i);\n")
    code, _, err = cli(capsys, "verify", str(f))
    assert code == EXIT_FAIL and "no oracle" in err


@pytest.mark.parametrize("fixture,oracle,word", [
    ("marked-square-corrupt.rasp", "marked-square", "aa"),
    ("increment-corrupt.pipeline", "increment", "0"),
    ("homomorphism-srasp-corrupt.ahat.json", "homomorphism-srasp", "A"),
])
def test_negative_controls_fail(capsys, fixture, oracle, word):  # [TRIVIAL] guards vacuous passes
    code, out, _ = cli(capsys, "verify", str(FIXTURES / fixture), "--oracle", oracle, "--json")
    doc = json.loads(out)
    assert code == EXIT_FAIL and not doc["ok"]
    assert doc["counterexample"]["input"] == word


def test_console_script():
    exe = shutil.which("rasp")
    argv = [exe] if exe else [sys.executable, "-m", "rasptrans.cli"]
    r = subprocess.run(argv + ["run", "increment", "0111"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "1000"
