"""Canonical pretty-printer: one statement per line, minimal parentheses."""
from __future__ import annotations

from . import ast as A

_PREC = {"or": 1, "and": 2, "not": 3, "<": 4, ">": 4, "<=": 4, ">=": 4, "==": 4, "!=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6}
_UNARY_MINUS = 7
_ATOM = 8


def _prec(node) -> int:
    if isinstance(node, A.BinOp):
        return _PREC[node.op]
    if isinstance(node, A.UnaryOp):
        return _PREC["not"] if node.op == "not" else _UNARY_MINUS
    if isinstance(node, (A.Let, A.If, A.Lambda, A.Assign)):
        return 0
    return _ATOM


def _wrap(node, minimum):
    s = format_expr(node)
    return f"({s})" if _prec(node) < minimum else s


def format_expr(node) -> str:
    if isinstance(node, A.Num):
        return str(node.value)
    if isinstance(node, A.Name):
        return node.id
    if isinstance(node, A.Attr):
        return f"{_wrap(node.obj, _ATOM)}.{node.name}"
    if isinstance(node, A.MethodCall):
        return f"{_wrap(node.obj, _ATOM)}.{node.name}()"
    if isinstance(node, A.FuncCall):
        return f"{node.name}({', '.join(format_expr(a) for a in node.args)})"
    if isinstance(node, A.BinOp):
        p = _PREC[node.op]
        # comparisons do not chain, so both sides need a tighter operator
        left_min = p + 1 if p == 4 else p
        return f"{_wrap(node.left, left_min)} {node.op} {_wrap(node.right, p + 1)}"
    if isinstance(node, A.UnaryOp):
        if node.op == "not":
            return f"not {_wrap(node.operand, _PREC['not'])}"
        return f"-{_wrap(node.operand, _UNARY_MINUS)}"
    if isinstance(node, A.Let):
        return f"let {node.name} = {format_expr(node.value)} in {format_expr(node.body)}"
    if isinstance(node, A.If):
        if node.orelse is None:
            return f"if ({format_expr(node.cond)}) {format_expr(node.then)}"
        then = format_expr(node.then)
        if isinstance(node.then, (A.If, A.Let, A.Lambda, A.Assign)):
            then = f"({then})"
        return f"if ({format_expr(node.cond)}) {then} else {format_expr(node.orelse)}"
    if isinstance(node, A.Lambda):
        return f"lambda {node.param}, {format_expr(node.body)}"
    if isinstance(node, A.Assign):
        return f"{format_expr(node.target)} {node.op} {format_expr(node.value)}"
    if isinstance(node, A.Event):
        return node.kind
    raise TypeError(f"cannot format {node!r}")


def format_def(d) -> str:
    if isinstance(d, A.ComparatorDef):
        return f"{d.name}({', '.join(d.params)}) = {format_expr(d.body)}"
    return f"{d.name}() = lambda {d.param}, {format_expr(d.body)}"


def format_decl(d: A.ObjectDecl) -> str:
    args = []
    if d.capacity is not None:
        args.append(format_expr(d.capacity))
    args.extend(d.members)
    return f"{d.name} = {d.kind}({', '.join(args)})"


def format_binding(b: A.PropertyBinding) -> str:
    lhs = f"{b.obj}.{b.prop}"
    if b.params is not None:
        lhs += f"({', '.join(b.params)})"
    return f"{lhs} = {format_expr(b.value)}"


def format_program(spec: A.ArchSpec) -> str:
    lines = [f"const {k} = {v}" for k, v in spec.constants.items()]
    for table in (spec.comparators, spec.predicates, spec.actions):
        lines.extend(format_def(d) for d in table.values())
    lines.extend(format_decl(d) for d in spec.declarations)
    lines.extend(format_binding(b) for b in spec.bindings)
    return "\n".join(lines) + ("\n" if lines else "")
