"""Bundled programs and expansion of k-queue templates.

The language has no loops, so architectures whose queue count depends on a
sweep parameter are written as templates. Two directives are recognised,
each on its own line:

    //@ repeat i=1..k: q{i} = Queue(B/k)
    //@ emit out = Port({queues})

``repeat`` emits its body once per value, substituting ``{i}``; bounds are
integers or constant names. ``emit`` emits its body once. In both,
``{queues}`` becomes ``q1, q2, ..., qk``. Other lines pass through.
"""
from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from .dsl import parse_program

DIRECTIVE = "//@"
_REPEAT = re.compile(r"//@\s*repeat\s+(\w+)\s*=\s*(\w+)\s*\.\.\s*(\w+)\s*:(.*)$")
_EMIT = re.compile(r"//@\s*emit\s+(.*)$")


def is_template(text: str) -> bool:
    return any(line.lstrip().startswith(DIRECTIVE) for line in text.splitlines())


def _bound(tok: str, constants: dict, lineno: int) -> int:
    if tok.isdigit():
        return int(tok)
    if tok not in constants:
        raise ValueError(f"line {lineno}: template needs constant {tok}")
    return int(constants[tok])


def expand_template(text: str, constants: dict) -> str:
    k = constants.get("k")
    queues = ", ".join(f"q{i}" for i in range(1, int(k) + 1)) if k is not None else None
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s.startswith(DIRECTIVE):
            out.append(line)
            continue
        m = _REPEAT.match(s)
        if m:
            var, lo, hi, body = m.groups()
            body = body.strip()
            for v in range(_bound(lo, constants, lineno), _bound(hi, constants, lineno) + 1):
                out.append(_subst(body.replace("{" + var + "}", str(v)), queues, lineno))
            continue
        m = _EMIT.match(s)
        if m:
            out.append(_subst(m.group(1).strip(), queues, lineno))
            continue
        raise ValueError(f"line {lineno}: unknown template directive {s!r}")
    return "\n".join(out) + "\n"


def _subst(body: str, queues, lineno: int) -> str:
    if "{queues}" in body:
        if queues is None:
            raise ValueError(f"line {lineno}: template needs constant k")
        body = body.replace("{queues}", queues)
    return body


def bundled() -> list:
    """Names of the programs shipped with the package."""
    root = resources.files("basel") / "programs"
    return sorted(p.name[:-len(".basel")] for p in root.iterdir() if p.name.endswith(".basel"))


def read_source(source: str) -> str:
    """Text of a bundled program name or a file path."""
    path = Path(source)
    if path.exists():
        return path.read_text(encoding="utf-8")
    name = source[:-len(".basel")] if source.endswith(".basel") else source
    res = resources.files("basel") / "programs" / f"{name}.basel"
    if res.is_file():
        return res.read_text(encoding="utf-8")
    raise FileNotFoundError(f"no such program or file: {source}")


def load_program(source: str, constants=None):
    """Read, expand if templated, parse and validate. Returns the ArchSpec."""
    constants = dict(constants or {})
    text = read_source(source)
    if is_template(text):
        text = expand_template(text, constants)
    return parse_program(text, constants)


def program_text(source: str, constants=None) -> str:
    text = read_source(source)
    return expand_template(text, dict(constants or {})) if is_template(text) else text
