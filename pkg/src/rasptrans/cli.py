"""``rasp`` command-line front end.

Exit codes: 0 success, 1 failed verification or run-time error, 2 syntax
error, 3 type error.
"""
from __future__ import annotations

import argparse
import os
import sys

from .lang import RaspSyntaxError, RaspTypeError, pretty, typecheck
from .lang.syntax import Program

EXIT_OK, EXIT_FAIL, EXIT_SYNTAX, EXIT_TYPE = 0, 1, 2, 3


def _load(path: str):
    from .verify import load_artifact
    return load_artifact(path)


def _program(path: str) -> Program:
    obj = _load(path)
    if not isinstance(obj, Program):
        raise SystemExit(f"rasp: {path} is not a RASP program")
    return obj


def _symbols(text: str, sep) -> tuple:
    if sep is None:
        return tuple(text)
    return tuple(s for s in text.split(sep) if s != "") if text else ()


def cmd_run(a) -> int:
    from .aha import TransformerSpec, transduce
    from .interp import run
    obj = _load(a.file)
    w = _symbols(a.input, a.sep)
    if isinstance(obj, Program):
        out = run(typecheck(obj), w, a.n, strict=not a.force_n)
    elif isinstance(obj, TransformerSpec):
        from .verify import lengths
        n = a.n or lengths(obj.minlen, len(w), (1,))[0]
        out = transduce(obj, w, n)
    else:
        from .verify import _fst_runner
        out = _fst_runner(obj)(w, None)
    print(out)
    return EXIT_OK


def cmd_trace(a) -> int:
    from .interp import render_trace, trace
    p = _program(a.file)
    t = trace(typecheck(p), _symbols(a.input, a.sep), a.n, strict=not a.force_n)
    sys.stdout.write(render_trace(t, a.format, a.show_fresh))
    return EXIT_OK


def cmd_check(a) -> int:
    tp = typecheck(_program(a.file))
    p = tp.program
    for msg in tp.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    print(f"ok: {p.name or a.file} ({p.dialect.value}, {len(p.defs)} definitions)")
    if a.verbose:
        for name, t in tp.types.items():
            print(f"  {name}: {t}")
    return EXIT_OK


def cmd_lower(a) -> int:
    p = typecheck(_program(a.file)).program
    if a.target == "fst":
        from .fst import pipeline_to_text
        from .lower import brasp_to_pipeline
        text = pipeline_to_text(brasp_to_pipeline(p))
    elif a.target == "srasp":
        from .lower import unpack_packed
        text = pretty(unpack_packed(p))
    else:
        from .aha import spec_to_json
        from .emit import compile as emit_compile
        from .lang.syntax import Dialect
        from .lower import unpack_packed
        src = p if p.dialect is Dialect.SRASP else unpack_packed(p)
        text = spec_to_json(emit_compile(src, a.pe_mode)) + "\n"
    if a.output:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {a.output}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(a) -> int:
    from .oracles import get
    from .verify import artifact_name, report_json, verify
    obj = _load(a.file)
    maxlen = a.maxlen
    if os.environ.get("RASP_MAXLEN"):
        maxlen = int(os.environ["RASP_MAXLEN"])
    name = a.oracle or artifact_name(obj, a.file)
    oracle = get(a.oracle) if a.oracle else None
    offsets = tuple(int(x) for x in a.lens.split(","))
    modes = ("B", "C") if a.pe_mode == "both" else (a.pe_mode,)
    r = verify(obj, name, a.against, maxlen, offsets, modes, oracle)
    print(report_json(r) if a.json else r)
    return EXIT_OK if r.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rasp", description="RASP dialect toolkit")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def io_args(sp):
        sp.add_argument("file", help="program file or corpus name")
        sp.add_argument("input", help="input word (one character per symbol unless --sep)")
        sp.add_argument("--n", type=int, default=None, help="vector length for padded programs")
        sp.add_argument("--force-n", action="store_true",
                        help="allow n at or below the minimum vector length")
        sp.add_argument("--sep", default=None, help="symbol separator inside INPUT")

    sp = sub.add_parser("run", help="run a program, pipeline or transformer spec")
    io_args(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("trace", help="print every vector of a run")
    io_args(sp)
    sp.add_argument("--format", choices=("tsv", "markdown"), default="tsv")
    sp.add_argument("--show-fresh", action="store_true", help="include generated vectors")
    sp.set_defaults(fn=cmd_trace)

    sp = sub.add_parser("check", help="parse and typecheck")
    sp.add_argument("file")
    sp.add_argument("-v", "--verbose", action="store_true", help="print inferred types")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("lower", help="lower to a pipeline, S-RASP or a transformer")
    sp.add_argument("file")
    sp.add_argument("--target", choices=("fst", "aha", "srasp"), required=True)
    sp.add_argument("--pe-mode", choices=("B", "C"), default="B")
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(fn=cmd_lower)

    sp = sub.add_parser("verify", help="exhaustive check against oracle and backends")
    sp.add_argument("file")
    sp.add_argument("--against", action="append", choices=("oracle", "fst", "aha", "all"),
                    default=None)
    sp.add_argument("--maxlen", type=int, default=None, help="longest input (env RASP_MAXLEN wins)")
    sp.add_argument("--lens", default="1,2",
                    help="offsets k for padded runs at n = q(|w|) + k (comma separated)")
    sp.add_argument("--pe-mode", choices=("B", "C", "both"), default="both")
    sp.add_argument("--oracle", default=None, help="oracle name (default: program name)")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    if getattr(a, "against", "x") is None:
        a.against = ["oracle"]
    try:
        return a.fn(a)
    except RaspSyntaxError as e:
        print(f"syntax error: {e}", file=sys.stderr)
        return EXIT_SYNTAX
    except RaspTypeError as e:
        print(f"type error: {e}", file=sys.stderr)
        return EXIT_TYPE
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
