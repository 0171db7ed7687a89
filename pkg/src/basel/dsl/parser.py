"""Recursive-descent parser for BASEL source.

Statements end at a newline or ``;``. Inside parentheses newlines are
ignored, and a statement also continues across a newline that follows an
operator, ``lambda x,``, ``in``, ``if (...)`` or ``=``.
"""
from __future__ import annotations

from ..errors import Diagnostic, SpecError
from . import ast as A
from .lexer import Token, tokenize

DECL_KINDS = ("Queue", "Port", "Buffer")
METHODS = ("getHOL", "getCurrQueue", "getBestQueue")
PROP_ALIASES = {"proPrio": "procPrio"}  # spelling used in the single-queue listing


class _Fail(Exception):
    def __init__(self, diag):
        self.diag = diag


class Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def at(self, kind, text=None):
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_op(self, *ops):
        return self.tok.kind == "OP" and self.tok.text in ops

    def at_kw(self, *kws):
        return self.tok.kind == "KW" and self.tok.text in kws

    def fail(self, msg, tok=None):
        tok = tok or self.tok
        raise _Fail(Diagnostic(tok.line, tok.col, msg))

    def expect_op(self, op):
        if not self.at_op(op):
            self.fail(f"expected '{op}', found {describe(self.tok)}")
        return self.advance()

    def expect_kw(self, kw):
        if not self.at_kw(kw):
            self.fail(f"expected '{kw}', found {describe(self.tok)}")
        return self.advance()

    def expect_name(self):
        if self.tok.kind != "NAME":
            self.fail(f"expected a name, found {describe(self.tok)}")
        return self.advance()

    def skip_nl(self):
        while self.tok.kind == "NEWLINE":
            self.advance()

    # -- program -------------------------------------------------------
    def program(self):
        stmts, diags = [], []
        while True:
            while self.tok.kind == "NEWLINE" or self.at_op(";"):
                self.advance()
            if self.tok.kind == "EOF":
                break
            try:
                stmts.append(self.statement())
                if not (self.tok.kind in ("NEWLINE", "EOF") or self.at_op(";")):
                    self.fail(f"unexpected {describe(self.tok)}")
            except _Fail as f:
                diags.append(f.diag)
                while not (self.tok.kind in ("NEWLINE", "EOF") or self.at_op(";")):
                    self.advance()
        return stmts, diags

    def statement(self):
        if self.at_kw("const"):
            start = self.advance()
            name = self.expect_name()
            self.expect_op("=")
            neg = False
            if self.at_op("-"):
                self.advance()
                neg = True
            if self.tok.kind != "NUMBER":
                self.fail(f"constant value must be an integer, found {describe(self.tok)}")
            v = int(self.advance().text)
            return ("const", name.text, -v if neg else v, start.pos)

        head = self.expect_name()
        if self.at_op("("):
            params = self.param_list()
            self.expect_op("=")
            self.skip_nl()
            body = self.expr()
            return ("def", head.text, params, body, head.pos)
        if self.at_op("="):
            self.advance()
            kind = self.tok
            if kind.kind == "NAME" and kind.text in DECL_KINDS and self.peek().kind == "OP" and self.peek().text == "(":
                self.advance()
                return self.declaration(head, kind.text)
            self.fail("expected Queue(...), Port(...) or Buffer(...) after object name")
        if self.at_op("."):
            self.advance()
            prop = self.expect_name()
            params = None
            if self.at_op("("):
                params = self.param_list()
            if not self.at_op("="):
                self.fail(f"expected '=' in binding, found {describe(self.tok)}")
            self.advance()
            self.skip_nl()
            value = self.expr()
            return ("bind", A.PropertyBinding(head.text, PROP_ALIASES.get(prop.text, prop.text), params, value, head.pos))
        self.fail(f"unexpected {describe(self.tok)} after {head.text!r}")

    def param_list(self):
        self.expect_op("(")
        params = []
        if not self.at_op(")"):
            params.append(self.expect_name().text)
            while self.at_op(","):
                self.advance()
                params.append(self.expect_name().text)
        self.expect_op(")")
        return tuple(params)

    def declaration(self, head, kind):
        self.expect_op("(")
        capacity = None
        members, mpos = [], []
        if kind in ("Queue", "Buffer"):
            capacity = self.expr()
            if kind == "Buffer":
                while self.at_op(","):
                    self.advance()
                    t = self.expect_name()
                    members.append(t.text)
                    mpos.append(t.pos)
        else:
            if not self.at_op(")"):
                t = self.expect_name()
                members.append(t.text)
                mpos.append(t.pos)
                while self.at_op(","):
                    self.advance()
                    t = self.expect_name()
                    members.append(t.text)
                    mpos.append(t.pos)
        self.expect_op(")")
        return ("decl", A.ObjectDecl(head.text, kind, capacity, tuple(members), head.pos, tuple(mpos)))

    # -- expressions ---------------------------------------------------
    def expr(self):
        if self.at_kw("lambda"):
            start = self.advance()
            param = self.expect_name().text
            self.expect_op(",")
            self.skip_nl()
            return A.Lambda(param, self.expr(), start.pos)
        left = self.or_expr()
        if self.at_op("=", "+="):
            op = self.advance()
            if not isinstance(left, A.Attr):
                self.fail("assignment target must be an attribute", op)
            self.skip_nl()
            return A.Assign(left, op.text, self.expr(), op.pos)
        return left

    def or_expr(self):
        left = self.and_expr()
        while self.at_kw("or"):
            op = self.advance()
            self.skip_nl()
            left = A.BinOp("or", left, self.and_expr(), op.pos)
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.at_kw("and"):
            op = self.advance()
            self.skip_nl()
            left = A.BinOp("and", left, self.not_expr(), op.pos)
        return left

    def not_expr(self):
        if self.at_kw("not"):
            op = self.advance()
            return A.UnaryOp("not", self.not_expr(), op.pos)
        return self.cmp_expr()

    def cmp_expr(self):
        left = self.add_expr()
        if self.at_op(*A.CMP_OPS):
            op = self.advance()
            self.skip_nl()
            left = A.BinOp(op.text, left, self.add_expr(), op.pos)
            if self.at_op(*A.CMP_OPS):
                self.fail("comparisons cannot be chained")
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.at_op("+", "-"):
            op = self.advance()
            self.skip_nl()
            left = A.BinOp(op.text, left, self.mul_expr(), op.pos)
        return left

    def mul_expr(self):
        left = self.unary()
        while self.at_op("*", "/"):
            op = self.advance()
            self.skip_nl()
            left = A.BinOp(op.text, left, self.unary(), op.pos)
        return left

    def unary(self):
        if self.at_op("-"):
            op = self.advance()
            return A.UnaryOp("-", self.unary(), op.pos)
        return self.postfix()

    def postfix(self):
        node = self.primary()
        while self.at_op("."):
            self.advance()
            name = self.expect_name()
            if self.at_op("("):
                self.advance()
                self.expect_op(")")
                node = A.MethodCall(node, name.text, name.pos)
            else:
                node = A.Attr(node, name.text, name.pos)
        return node

    def primary(self):
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            return A.Num(int(t.text), t.pos)
        if t.kind == "NAME":
            self.advance()
            if self.at_op("("):
                self.advance()
                args = []
                if not self.at_op(")"):
                    args.append(self.expr())
                    while self.at_op(","):
                        self.advance()
                        args.append(self.expr())
                self.expect_op(")")
                return A.FuncCall(t.text, tuple(args), t.pos)
            return A.Name(t.text, t.pos)
        if self.at_op("("):
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        if self.at_kw("let"):
            self.advance()
            name = self.expect_name().text
            self.expect_op("=")
            self.skip_nl()
            value = self.expr()
            self.skip_nl()
            self.expect_kw("in")
            self.skip_nl()
            return A.Let(name, value, self.expr(), t.pos)
        if self.at_kw("if"):
            self.advance()
            self.expect_op("(")
            cond = self.expr()
            self.expect_op(")")
            self.skip_nl()
            then = self.expr()
            orelse = None
            if self.at_kw("else"):
                self.advance()
                self.skip_nl()
                orelse = self.expr()
            return A.If(cond, then, orelse, t.pos)
        if self.at_kw(*A.EVENTS):
            self.advance()
            return A.Event(t.text, t.pos)
        self.fail(f"unexpected {describe(t)}")


def describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    if tok.kind == "NEWLINE":
        return "end of line"
    return f"'{tok.text}'"


def parse(text: str) -> A.ArchSpec:
    """Parse source into an ArchSpec without semantic validation.

    Raises SpecError on lexical, syntax or definition-arity errors.
    """
    tokens, diags = tokenize(text)
    stmts, pdiags = Parser(tokens).program()
    lexed_bad = {d.line for d in diags}
    # a syntax error on a line with a lexical error is usually its echo
    diags.extend(d for d in pdiags if d.line not in lexed_bad)
    spec = A.ArchSpec()
    for st in stmts:
        tag = st[0]
        if tag == "const":
            _, name, value, pos = st
            if name in spec.constants:
                diags.append(Diagnostic(*pos, f"duplicate constant {name}"))
            spec.constants[name] = value
        elif tag == "def":
            _, name, params, body, pos = st
            d = _make_def(name, params, body, pos, diags)
            if d is None:
                continue
            if spec.definition(name) is not None:
                diags.append(Diagnostic(*pos, f"duplicate definition {name}"))
                continue
            if isinstance(d, A.ComparatorDef):
                spec.comparators[name] = d
            elif isinstance(d, A.PredicateDef):
                spec.predicates[name] = d
            else:
                spec.actions[name] = d
        elif tag == "decl":
            spec.declarations.append(st[1])
        else:
            spec.bindings.append(st[1])
    if diags:
        raise SpecError(sorted(diags, key=lambda d: (d.line, d.col)))
    return spec


def _make_def(name, params, body, pos, diags):
    if isinstance(body, A.Lambda):
        if params:
            diags.append(Diagnostic(*pos, f"arity mismatch: {name} binds its object with lambda and takes no parameters"))
            return None
        if A.contains_effects(body.body):
            return A.ActionDef(name, body.param, body.body, pos)
        return A.PredicateDef(name, body.param, body.body, pos)
    if len(params) != 2:
        diags.append(Diagnostic(*pos, f"arity mismatch: comparator {name} must take exactly two parameters, got {len(params)}"))
        return None
    if params[0] == params[1]:
        diags.append(Diagnostic(*pos, f"comparator {name} repeats parameter {params[0]}"))
        return None
    return A.ComparatorDef(name, tuple(params), body, pos)


def parse_expr(text: str):
    """Parse a single expression (used by tests and the REPL-less CLI)."""
    tokens, diags = tokenize(text)
    if diags:
        raise SpecError(diags)
    p = Parser([t for t in tokens if t.kind != "NEWLINE"])
    try:
        e = p.expr()
        if p.tok.kind != "EOF":
            p.fail(f"unexpected {describe(p.tok)}")
    except _Fail as f:
        raise SpecError([f.diag]) from None
    return e
