"""Recursive-descent parser for the ``.rasp`` DSL."""
from __future__ import annotations

import re
import shlex
from dataclasses import dataclass

from .syntax import (
    MASKS, And, Apply, Arith, Attention, BoolLit, Compare, Concat, Cond, Contains,
    Dead, Def, Dialect, IoConvention, LastIndex, Lookup, NatLit, Neighbor, Not,
    Or, PositionWise, PrefixSum, Program, Read, SymLit, Table,
)


class RaspSyntaxError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg, self.line, self.col = msg, line, col


@dataclass
class Tok:
    kind: str  # id, int, str, op, eof
    text: str
    line: int
    col: int


_UNICODE = {"⊤": "true", "⊥": "false", "≤": "<=", "≥": ">=", "≠": "!=",
            "∧": "and", "∨": "or", "¬": "not", "·": "."}
_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<str>'(?:[^'\\\n]|\\.)*')
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<op>->|<=|>=|!=|==|[=<>+\-.()\[\],:;{}]|[⊤⊥≤≥≠∧∨¬·])
""", re.VERBOSE)


def tokenize(text: str, line0: int = 1) -> list:
    toks, pos, line, lstart = [], 0, line0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise RaspSyntaxError(f"unexpected character {text[pos]!r}", line, pos - lstart + 1)
        kind, val = m.lastgroup, m.group()
        col = pos - lstart + 1
        pos = m.end()
        if kind == "nl":
            line, lstart = line + 1, pos
            continue
        if kind in ("ws", "comment"):
            continue
        if kind == "str":
            val = re.sub(r"\\(.)", r"\1", val[1:-1])
        elif kind == "op" and val in _UNICODE:
            val = _UNICODE[val]
            kind = "id" if val.isalpha() else "op"
        elif kind == "op" and val == "==":
            val = "="
        toks.append(Tok(kind, val, line, col))
    toks.append(Tok("eof", "", line, pos - lstart + 1))
    return toks


class _Parser:
    def __init__(self, toks, tables):
        self.toks, self.i, self.tables = toks, 0, tables

    @property
    def cur(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.cur
        raise RaspSyntaxError(msg, tok.line, tok.col)

    def at(self, text, kind=None) -> bool:
        t = self.cur
        return t.text == text and t.kind in ((kind,) if kind else ("op", "id"))

    def eat(self, text) -> Tok:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.cur.text or 'end of input'!r}")
        t = self.cur
        self.i += 1
        return t

    def ident(self) -> str:
        if self.cur.kind != "id":
            self.error(f"expected identifier, found {self.cur.text!r}")
        t = self.cur
        self.i += 1
        return t.text

    # expression levels, loosest first
    def expr(self):
        then = self.disj()
        if self.at("if", "id"):
            self.i += 1
            cond = self.disj()
            self.eat("else")
            return Cond(then, cond, self.expr())
        return then

    def disj(self):
        e = self.conj()
        while self.at("or", "id"):
            self.i += 1
            e = Or(e, self.conj())
        return e

    def conj(self):
        e = self.neg()
        while self.at("and", "id"):
            self.i += 1
            e = And(e, self.neg())
        return e

    def neg(self):
        # ``not(i)`` is a read of a vector named "not", as in the increment example
        if self.at("not", "id") and not (self.peek().text == "(" and self.peek(2).text in ("i", "j")
                                         and self.peek(3).text in (")", "+", "-")):
            self.i += 1
            return Not(self.neg())
        return self.comparison()

    def comparison(self):
        left = self.concat()
        if self.at("in", "id"):
            if not isinstance(left, SymLit):
                self.error("left operand of 'in' must be a symbol literal")
            self.i += 1
            return Contains(left.value, self.concat())
        if self.cur.kind == "op" and self.cur.text in ("=", "!=", "<", "<=", ">", ">="):
            op = self.cur.text
            self.i += 1
            return Compare(op, left, self.concat())
        return left

    def concat(self):
        e = self.arith()
        while self.at(".", "op"):
            self.i += 1
            e = Concat(e, self.arith())
        return e

    def arith(self):
        e = self.primary()
        while self.cur.kind == "op" and self.cur.text in ("+", "-"):
            op = self.cur.text
            self.i += 1
            e = Arith(op, e, self.primary())
        return e

    def primary(self):
        t = self.cur
        if t.kind == "int":
            self.i += 1
            return NatLit(int(t.text))
        if t.kind == "str":
            self.i += 1
            return SymLit(t.text)
        if self.at("(", "op"):
            self.i += 1
            e = self.expr()
            self.eat(")")
            return e
        if t.kind != "id":
            self.error(f"unexpected {t.text or 'end of input'!r}")
        if t.text in ("true", "false"):
            self.i += 1
            return BoolLit(t.text == "true")
        if t.text == "dead":
            self.i += 1
            return Dead()
        if t.text == "n" and not (self.peek().text == "(" and self.peek().kind == "op"):
            self.i += 1
            self.eat("-")
            one = self.cur
            if one.kind != "int" or one.text != "1":
                self.error("only 'n-1' may mention n")
            self.i += 1
            return LastIndex()
        name = self.ident()
        if not self.at("(", "op"):
            self.error(f"bare identifier {name!r}; vectors are read as {name}(i) or {name}(j)", t)
        self.i += 1
        if name in self.tables:
            args = [self.expr()]
            while self.at(",", "op"):
                self.i += 1
                args.append(self.expr())
            self.eat(")")
            if len(args) != self.tables[name]:
                self.error(f"table {name!r} expects {self.tables[name]} argument(s)", t)
            return Apply(name, tuple(args))
        return self.vector_read(name)

    def vector_read(self, name):
        t, nxt = self.cur, self.peek()
        if t.kind == "id" and t.text in ("i", "j") and nxt.text == ")":
            self.i += 2
            return Read(name, t.text)
        if (t.kind == "id" and t.text == "i" and nxt.text in ("+", "-")
                and self.peek(2).kind == "int" and self.peek(3).text == ")"):
            off = int(self.peek(2).text) * (1 if nxt.text == "+" else -1)
            self.i += 4
            if off == 0:
                return Read(name, "i")
            return Neighbor(name, off)
        if t.kind == "id" and t.text in ("i", "j"):
            self.error(f"position variable {t.text!r} may only appear as a whole index")
        idx = self.expr()
        self.eat(")")
        return Lookup(name, idx)

    def mask(self) -> str:
        if self.at("true", "id"):
            self.i += 1
            return "true"
        start = self.cur
        if not self.at("j", "id"):
            self.error("mask must be one of " + ", ".join(MASKS))
        self.i += 1
        op = self.cur.text
        self.i += 1
        self.eat("i")
        m = f"j{op}i"
        if m not in MASKS:
            self.error(f"unknown mask {m!r}", start)
        return m

    def rhs(self):
        if self.cur.kind == "id" and self.cur.text in ("leftmost", "rightmost") \
                and self.peek().text == "j" and self.peek(2).text == "[":
            choice = self.ident()
            self.eat("j")
            self.eat("[")
            mask = self.mask()
            self.eat(",")
            score = self.expr()
            self.eat("]")
            value = self.expr()
            if self.at(":", "op"):
                self.i += 1
                return Attention(choice, mask, score, value, self.expr(), False)
            return Attention(choice, mask, score, value)
        if self.at("sum", "id") and self.peek().text == "j":
            self.i += 1
            self.eat("j")
            self.eat("[")
            if self.mask() != "j<=i":
                self.error("prefix sums use the mask j<=i")
            self.eat("]")
            return PrefixSum(self.expr())
        return PositionWise(self.expr())

    def defs(self):
        out, seen = [], set()
        while self.cur.kind != "eof":
            t = self.cur
            name = self.ident()
            if name in ("in", "pos"):
                self.error(f"{name!r} is predefined", t)
            if name in seen:
                self.error(f"duplicate definition of {name!r}", t)
            if name in self.tables:
                self.error(f"{name!r} is already a table", t)
            seen.add(name)
            self.eat("(")
            self.eat("i")
            self.eat(")")
            self.eat("=")
            rhs = self.rhs()
            self.eat(";")
            out.append(Def(name, rhs))
        return out

    def table_entries(self):
        entries = []
        while not self.at("}", "op"):
            args = [self.string()]
            while self.at(",", "op"):
                self.i += 1
                args.append(self.string())
            self.eat("->")
            entries.append((tuple(args), self.string()))
            if not self.at("}", "op"):
                self.eat(";")
        self.i += 1
        return entries

    def string(self) -> str:
        t = self.cur
        if t.kind not in ("str", "int", "id"):
            self.error(f"expected a symbol, found {t.text!r}")
        self.i += 1
        return t.text


_HEADERS = ("name", "dialect", "sigma", "gamma", "io", "minlen")


def _split_symbols(value: str, line: int) -> tuple:
    try:
        syms = shlex.split(value, comments=True, posix=True)
    except ValueError as exc:
        raise RaspSyntaxError(str(exc), line, 1) from None
    if len(set(syms)) != len(syms):
        raise RaspSyntaxError("duplicate symbol in alphabet", line, 1)
    return tuple(syms)


def parse(text: str) -> Program:
    """Parse ``.rasp`` source into a Program."""
    lines = text.split("\n")
    header = {}
    tables, arities = [], {}
    li = 0
    while li < len(lines):
        raw = lines[li]
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            li += 1
            continue
        m = re.match(r"([a-z]+)\s*:(.*)$", stripped)
        if m and m.group(1) in _HEADERS:
            key, value = m.group(1), m.group(2).strip()
            if key in header:
                raise RaspSyntaxError(f"duplicate header {key!r}", li + 1, 1)
            header[key] = (value, li + 1)
            li += 1
            continue
        if stripped.startswith("table ") or stripped.startswith("table\t"):
            # tables may span several lines until the closing brace
            start = li
            chunk = raw
            while "}" not in _strip_strings(chunk) and li + 1 < len(lines):
                li += 1
                chunk += "\n" + lines[li]
            toks = tokenize(chunk, start + 1)
            p = _Parser(toks, arities)
            p.eat("table")
            tname = p.ident()
            if tname in arities:
                p.error(f"duplicate table {tname!r}")
            p.eat("{")
            entries = p.table_entries()
            if p.cur.kind != "eof":
                p.error("trailing tokens after table")
            if not entries:
                raise RaspSyntaxError(f"table {tname!r} is empty", start + 1, 1)
            arity = len(entries[0][0])
            if any(len(a) != arity for a, _ in entries):
                raise RaspSyntaxError(f"table {tname!r} has mixed arities", start + 1, 1)
            keys = [a for a, _ in entries]
            if len(set(keys)) != len(keys):
                raise RaspSyntaxError(f"table {tname!r} has a repeated key", start + 1, 1)
            arities[tname] = arity
            tables.append(Table(tname, arity, tuple(entries)))
            li += 1
            continue
        break
    if "dialect" not in header:
        raise RaspSyntaxError("missing 'dialect:' header", 1, 1)
    dval, dline = header["dialect"]
    try:
        dialect = Dialect(dval)
    except ValueError:
        raise RaspSyntaxError(f"unknown dialect {dval!r}", dline, 1) from None
    sigma = _split_symbols(header["sigma"][0], header["sigma"][1]) if "sigma" in header else ()
    gamma = _split_symbols(header["gamma"][0], header["gamma"][1]) if "gamma" in header else sigma
    io, k = _parse_io(header.get("io"), dialect)
    minlen = header["minlen"][0] if "minlen" in header else None
    if minlen is not None:
        _check_minlen(minlen, header["minlen"][1])
    body = "\n".join(lines[li:])
    p = _Parser(tokenize(body, li + 1), arities)
    defs = p.defs()
    name = header["name"][0] if "name" in header else ""
    return Program(dialect=dialect, io=io, sigma=sigma, gamma=gamma, defs=tuple(defs),
                   k=k, minlen=minlen, tables=tuple(tables), name=name)


def _strip_strings(s: str) -> str:
    return re.sub(r"'(?:[^'\\\n]|\\.)*'", "", s)


def _parse_io(entry, dialect):
    if entry is None:
        io = IoConvention.PADDED if dialect is Dialect.SRASP else IoConvention.LENGTH
        return io, 1
    value, line = entry
    parts = value.split()
    try:
        io = IoConvention(parts[0])
    except (ValueError, IndexError):
        raise RaspSyntaxError(f"unknown io convention {value!r}", line, 1) from None
    k = 1
    if io is IoConvention.PACKED:
        if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
            raise RaspSyntaxError("packed io needs a bound k >= 1", line, 1)
        k = int(parts[1])
    elif len(parts) != 1:
        raise RaspSyntaxError(f"unexpected tokens after {parts[0]!r}", line, 1)
    return io, k


def _check_minlen(expr: str, line: int):
    from ..minlen import compile_minlen
    try:
        compile_minlen(expr)
    except ValueError as exc:
        raise RaspSyntaxError(f"bad minlen: {exc}", line, 1) from None
