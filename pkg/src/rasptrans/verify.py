"""Exhaustive cross-backend verification over all short input words."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .aha import TransformerSpec, spec_from_json, transduce
from .fst import Dft, Pipeline, load as load_fst, run_dft, run_pipeline
from .lang import parse, typecheck
from .lang.syntax import Dialect, IoConvention, Program
from .minlen import compile_minlen
from .oracles import Oracle, get as get_oracle

BACKENDS = ("oracle", "fst", "aha")


@dataclass
class Failure:
    word: str
    n: Optional[int]
    backend: str
    expected: str
    got: str

    def __str__(self):
        at = f" (n={self.n})" if self.n is not None else ""
        return (f"counterexample w={self.word!r}{at}: {self.backend} gave {self.got!r}, "
                f"expected {self.expected!r}")


@dataclass
class Report:
    name: str
    backends: list
    words: int = 0
    checks: int = 0
    skipped: int = 0
    failure: Optional[Failure] = None
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failure is None

    def __str__(self):
        head = "PASS" if self.ok else "FAIL"
        lines = [f"{head} {self.name}: {self.words} inputs, {self.checks} comparisons "
                 f"against {', '.join(self.backends) or 'nothing'}"]
        if self.skipped:
            lines.append(f"  {self.skipped} inputs outside the oracle's domain skipped")
        lines += [f"  note: {x}" for x in self.notes]
        if self.failure:
            lines.append("  " + str(self.failure))
        return "\n".join(lines)


def words(sigma: Sequence[str], maxlen: int):
    """All words up to ``maxlen`` in shortlex order."""
    for length in range(maxlen + 1):
        for w in itertools.product(sigma, repeat=length):
            yield "".join(w)


def lengths(minlen: Optional[str], ell: int, offsets: Sequence[int]) -> list:
    """Vector lengths q(ell) + k for padded programs (always above ell)."""
    q = max(ell, compile_minlen(minlen)(ell)) if minlen else ell
    return [q + k for k in offsets]


# ------------------------------------------------------------------ artifacts

def load_artifact(path_or_name: str):
    """A program (by path or corpus name), a DFT or pipeline file, or a transformer spec."""
    from .fixtures import corpus_names, corpus_text
    p = Path(path_or_name)
    if not p.exists():
        if path_or_name in corpus_names():
            return parse(corpus_text(path_or_name))
        raise FileNotFoundError(path_or_name)
    text = p.read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{") and '"ahat-spec/1"' in text:
        return spec_from_json(text)
    first = next((ln.strip() for ln in text.splitlines()
                  if ln.strip() and not ln.strip().startswith("#")), "")
    if first.startswith(("pipeline:", "dft:", "states:", "sigma:")) and not _looks_like_program(text):
        return load_fst(p)
    return parse(text)


def _looks_like_program(text: str) -> bool:
    return any(ln.strip().startswith(("dialect:", "name:")) for ln in text.splitlines())


def artifact_name(obj, path_or_name: str) -> str:
    if isinstance(obj, Program) and obj.name:
        return obj.name
    return Path(path_or_name).stem


# ------------------------------------------------------------------ backends

def _rasp_runner(p: Program):
    from .interp import run
    tp = typecheck(p)
    return lambda w, n: run(tp, w, n)


def _fst_runner(machine):
    if isinstance(machine, Pipeline):
        if machine.components:
            from .lower import pipeline_output
            return lambda w, n: pipeline_output(machine, w)
        return lambda w, n: "".join(run_pipeline(machine, tuple(w)))
    if isinstance(machine, Dft):
        return lambda w, n: "".join(run_dft(machine, tuple(w)))
    return lambda w, n: "".join(machine.transduce(tuple(w)))


def _aha_runner(spec: TransformerSpec):
    return lambda w, n: transduce(spec, w, n)


def _padded(p: Program) -> bool:
    return p.io is IoConvention.PADDED


def build_backends(p: Program, against: Sequence[str], pe_modes: Sequence[str]) -> tuple:
    """Backend runners for a program; each maps (w, n) to an output string.

    Returns (runners, notes) with runners a list of (label, fn, padded, minlen).
    """
    from .emit import compile as emit_compile
    from .lower import brasp_to_pipeline, unpack_packed
    runners, notes = [], []
    if "fst" in against:
        if p.dialect is Dialect.BRASP:
            pl = brasp_to_pipeline(p)
            runners.append((f"fst({len(pl.stages)} stages)", _fst_runner(pl), False, None))
        else:
            notes.append(f"fst backend needs a brasp program (this one is {p.dialect.value})")
    if "aha" in against:
        src = p if p.dialect is Dialect.SRASP else unpack_packed(p)
        for mode in pe_modes:
            spec = emit_compile(src, mode)
            runners.append((f"aha[{mode}]", _aha_runner(spec), True, src.minlen))
    return runners, notes


def verify(target, name: Optional[str] = None, against: Sequence[str] = ("oracle",),
           maxlen: Optional[int] = None, offsets: Sequence[int] = (1, 2),
           pe_modes: Sequence[str] = ("B",), oracle: Optional[Oracle] = None,
           progress: Optional[Callable[[str], None]] = None) -> Report:
    """Compare backends on every word up to ``maxlen``.

    ``target`` is a Program (run by the interpreter and, on request, by the
    lowered backends) or a ready pipeline, DFT or transformer spec. The oracle
    is the reference whenever it takes part; otherwise the interpreter is.
    Offsets are added to the minimum vector length q(|w|) to pick the vector
    lengths for padded runs. Stops at the first (shortlex least) failure.
    """
    against = tuple(BACKENDS if "all" in against else against)
    if isinstance(target, Program):
        name = name or target.name
    if oracle is None and ("oracle" in against or not isinstance(target, Program)):
        oracle = get_oracle(name)
    if maxlen is None:
        maxlen = oracle.maxlen if oracle else 4
    report = Report(name or "?", [])
    oracle_fn = (lambda w, n: oracle(w)) if oracle is not None else None
    if isinstance(target, Program):
        sigma = target.sigma
        runners, report.notes = build_backends(target, against, pe_modes)
        runners.insert(0, ("interp", _rasp_runner(target), _padded(target), target.minlen))
    else:
        sigma = oracle.sigma
        if isinstance(target, TransformerSpec):
            runners = [(f"aha[{target.mode}]", _aha_runner(target), True, target.minlen)]
        else:
            runners = [("fst", _fst_runner(target), False, None)]
    use_oracle = oracle is not None and ("oracle" in against or not isinstance(target, Program))
    if use_oracle:
        ref_label, ref, ref_padded, ref_minlen = "oracle", oracle_fn, False, None
    else:
        ref_label, ref, ref_padded, ref_minlen = runners.pop(0)
    report.backends = [f"{ref_label} (reference)"] + [label for label, *_ in runners]
    for w in words(sigma, maxlen):
        if oracle is not None and not oracle.accepts(w):
            report.skipped += 1
            continue
        report.words += 1
        ns = lengths(ref_minlen, len(w), offsets) if ref_padded else [None]
        expected = ref(w, ns[0])
        for n in ns[1:]:
            other = ref(w, n)
            if other != expected:
                report.failure = Failure(w, n, ref_label, expected, other)
                return report
        for label, fn, padded, minlen in runners:
            for n in (lengths(minlen, len(w), offsets) if padded else [None]):
                report.checks += 1
                try:
                    got = fn(w, n)
                except Exception as exc:  # surfaced with the failing word
                    got = f"<{type(exc).__name__}: {exc}>"
                if got != expected:
                    report.failure = Failure(w, n, label, expected, got)
                    return report
        if progress and report.words % 500 == 0:
            progress(f"{report.words} inputs checked")
    return report


def report_json(r: Report) -> str:
    doc = {"name": r.name, "ok": r.ok, "backends": r.backends, "inputs": r.words,
           "comparisons": r.checks, "skipped": r.skipped, "notes": r.notes}
    if r.failure:
        f = r.failure
        doc["counterexample"] = {"input": f.word, "n": f.n, "backend": f.backend,
                                 "expected": f.expected, "got": f.got}
    return json.dumps(doc, ensure_ascii=False)
