from __future__ import annotations

from dataclasses import dataclass

from ..errors import Diagnostic

KEYWORDS = {
    "lambda", "let", "in", "if", "else", "and", "or", "not", "const",
    "MARK", "NOTIFY", "NONE",
}

# longest first
OPERATORS = (
    "+=", "==", "!=", "<=", ">=", "&&", "||",
    "(", ")", ",", ";", ".", "=", "<", ">", "+", "-", "*", "/", "!",
)

_ALIASES = {"&&": "and", "||": "or", "!": "not"}


@dataclass(frozen=True)
class Token:
    kind: str  # NAME, NUMBER, OP, KW, NEWLINE, EOF
    text: str
    line: int
    col: int

    @property
    def pos(self):
        return (self.line, self.col)


def tokenize(text: str):
    """Split source into tokens.

    Returns ``(tokens, diagnostics)``. Newlines are significant only outside
    parentheses, where they terminate statements.
    """
    tokens = []
    diags = []
    depth = 0
    i = 0
    line, col = 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            if depth == 0:
                tokens.append(Token("NEWLINE", "\n", line, col))
            i += 1
            line, col = line + 1, 1
            continue
        if c in " \t\r﻿":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(Token("KW" if word in KEYWORDS else "NAME", word, line, col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and (text[j].isalpha() or text[j] == "_"):
                diags.append(Diagnostic(line, col, f"malformed number {text[i:j + 1]!r}"))
            tokens.append(Token("NUMBER", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                if op == "(":
                    depth += 1
                elif op == ")":
                    depth = max(0, depth - 1)
                if op in _ALIASES:
                    tokens.append(Token("KW", _ALIASES[op], line, col))
                else:
                    tokens.append(Token("OP", op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            diags.append(Diagnostic(line, col, f"unexpected character {c!r}"))
            i += 1
            col += 1
    tokens.append(Token("EOF", "", line, col))
    return tokens, diags
