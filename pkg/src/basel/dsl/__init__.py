"""BASEL language front end: lexer, parser, checker, printer and evaluator."""
from __future__ import annotations

from ..errors import SpecError
from .ast import ArchSpec
from .check import external_constants, validate
from .evaluator import Context, Effect, eval_comparator, eval_predicate, exec_action
from .parser import parse, parse_expr
from .printer import format_program


def parse_program(text: str, constants=None) -> ArchSpec:
    """Parse and validate; raises SpecError carrying every diagnostic.

    Pass ``constants`` to also require that every free identifier is bound.
    """
    spec = parse(text)
    consts = None
    if constants is not None:
        consts = dict(spec.constants)
        consts.update(constants)
    diags = validate(spec, consts)
    if diags:
        raise SpecError(diags)
    return spec


__all__ = [
    "ArchSpec", "Context", "Effect", "eval_comparator", "eval_predicate", "exec_action",
    "external_constants", "format_program", "parse", "parse_expr", "parse_program", "validate",
]
