"""Minimum-vector-length expressions: integer arithmetic in the variable ``l``."""
from __future__ import annotations

import ast
from functools import lru_cache

_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.FloorDiv: lambda a, b: a // b}
_FUNCS = {"max": max, "min": min}


def _check(node):
    if isinstance(node, ast.Expression):
        return _check(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return
    if isinstance(node, ast.Name) and node.id == "l":
        return
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left)
        _check(node.right)
        return
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id in _FUNCS and node.args and not node.keywords:
        for a in node.args:
            _check(a)
        return
    raise ValueError(f"unsupported construct {ast.dump(node)[:40]}")


def _eval(node, l):
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        return l
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, l), _eval(node.right, l))
    return _FUNCS[node.func.id](*(_eval(a, l) for a in node.args))


@lru_cache(maxsize=None)
def compile_minlen(expr: str):
    """Return a function ``l -> q(l)``; raises ValueError on anything but l-arithmetic."""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(str(exc)) from None
    _check(tree)
    return lambda l: _eval(tree.body, l)


def substitute(expr: str, inner: str) -> str:
    """Textual q[l := inner], done on the syntax tree."""
    compile_minlen(expr)
    compile_minlen(inner)
    repl = ast.parse(inner.strip(), mode="eval").body

    class Sub(ast.NodeTransformer):
        def visit_Name(self, node):
            return repl if node.id == "l" else node

    tree = Sub().visit(ast.parse(expr.strip(), mode="eval"))
    return ast.unparse(tree)
