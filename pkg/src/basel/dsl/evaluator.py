"""Compile BASEL expressions into Python closures and evaluate them.

Every compiled node is a function ``f(frame, cx)``: ``frame`` is a tuple of
local values (parameters, then let-bound names) and ``cx`` the runtime
Context. Values are Python ints, bools and runtime objects (Packet,
QueueState, PortState, BufferState).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .. import builtins
from ..errors import EvalError
from . import ast as A

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1


@dataclass(frozen=True)
class Effect:
    kind: str  # "weight", "MARK" or "NOTIFY"
    target: str
    prop: Optional[str] = None
    delta: int = 0
    value: int = 0
    slot: int = -1


@dataclass
class Context:
    """Per-run evaluation state."""

    constants: dict = field(default_factory=dict)
    slot: int = 0
    exclude_pending: bool = False
    effects: Optional[list] = None


def _checked(v):
    if v < INT64_MIN or v > INT64_MAX:
        raise EvalError("integer overflow")
    return v


def _div(a, b):
    if b == 0:
        raise EvalError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _get_attr(obj, name, cx):
    try:
        return obj.basel_attr(name, cx)
    except AttributeError:
        raise EvalError(f"{type(obj).__name__} has no attribute {name}") from None


def _call_method(obj, name, cx):
    try:
        fn = obj.basel_method
    except AttributeError:
        raise EvalError(f"{type(obj).__name__} has no method {name}()") from None
    return fn(name, cx)


class Compiler:
    """Turns definitions into callables; caches per definition object."""

    def __init__(self, spec: Optional[A.ArchSpec] = None):
        self.spec = spec
        self._cache = {}

    def lookup(self, name):
        d = self.spec.definition(name) if self.spec is not None else None
        return d if d is not None else builtins.lookup(name)

    def _cached(self, d):
        hit = self._cache.get(id(d))
        if hit is not None and hit[0] is d:
            return hit[1]
        return False

    def comparator(self, d: A.ComparatorDef):
        fn = self._cached(d)
        if fn is False:
            self._cache[id(d)] = (d, None)  # placeholder against cycles
            body = self.expr(d.body, list(d.params))
            name = d.name

            def cmp(a, b, cx):
                try:
                    return body((a, b), cx)
                except EvalError as e:
                    raise e.located(name) from None

            cmp.definition = d
            self._cache[id(d)] = (d, cmp)
            fn = cmp
        return fn

    def predicate(self, d):
        """Predicates and actions share the one-argument calling convention."""
        fn = self._cached(d)
        if fn is False:
            self._cache[id(d)] = (d, None)
            body = self.expr(d.body, [d.param])
            name = d.name

            def pred(obj, cx):
                try:
                    return body((obj,), cx)
                except EvalError as e:
                    raise e.located(name) from None

            pred.definition = d
            self._cache[id(d)] = (d, pred)
            fn = pred
        return fn

    action = predicate

    def _callable(self, name):
        d = self.lookup(name)
        if d is None:
            raise EvalError(f"unresolved name {name}")
        if self._cached(d) is None:
            raise EvalError(f"recursive definition {name}")
        if isinstance(d, A.ComparatorDef):
            return self.comparator(d), 2
        if isinstance(d, A.PredicateDef):
            return self.predicate(d), 1
        raise EvalError(f"action {name} cannot be called inside an expression")

    def expr(self, e, scope):
        t = type(e)
        if t is A.Num:
            v = e.value
            return lambda fr, cx: v
        if t is A.Name:
            name = e.id
            if name in scope:
                i = len(scope) - 1 - scope[::-1].index(name)
                return lambda fr, cx: fr[i]

            def const(fr, cx):
                try:
                    return cx.constants[name]
                except KeyError:
                    raise EvalError(f"unbound constant {name}") from None

            return const
        if t is A.Attr:
            obj = self.expr(e.obj, scope)
            name = e.name
            if name in ("arrival", "processing", "value", "slack", "queue"):
                def packet_attr(fr, cx):
                    o = obj(fr, cx)
                    try:
                        return getattr(o, name)
                    except AttributeError:
                        raise EvalError(f"{type(o).__name__} has no attribute {name}") from None
                return packet_attr
            return lambda fr, cx: _get_attr(obj(fr, cx), name, cx)
        if t is A.MethodCall:
            obj = self.expr(e.obj, scope)
            name = e.name
            return lambda fr, cx: _call_method(obj(fr, cx), name, cx)
        if t is A.FuncCall:
            args = [self.expr(a, scope) for a in e.args]
            fname = e.name
            holder = []

            def call(fr, cx):
                if not holder:
                    holder.append(self._callable(fname))
                fn, arity = holder[0]
                if arity != len(args):
                    raise EvalError(f"arity mismatch calling {fname}")
                return fn(*(a(fr, cx) for a in args), cx)

            return call
        if t is A.BinOp:
            left = self.expr(e.left, scope)
            right = self.expr(e.right, scope)
            op = e.op
            if op == "and":
                return lambda fr, cx: bool(left(fr, cx)) and bool(right(fr, cx))
            if op == "or":
                return lambda fr, cx: bool(left(fr, cx)) or bool(right(fr, cx))
            if op == "+":
                return lambda fr, cx: _checked(left(fr, cx) + right(fr, cx))
            if op == "-":
                return lambda fr, cx: _checked(left(fr, cx) - right(fr, cx))
            if op == "*":
                return lambda fr, cx: _checked(left(fr, cx) * right(fr, cx))
            if op == "/":
                return lambda fr, cx: _div(left(fr, cx), right(fr, cx))
            if op == "<":
                return lambda fr, cx: left(fr, cx) < right(fr, cx)
            if op == ">":
                return lambda fr, cx: left(fr, cx) > right(fr, cx)
            if op == "<=":
                return lambda fr, cx: left(fr, cx) <= right(fr, cx)
            if op == ">=":
                return lambda fr, cx: left(fr, cx) >= right(fr, cx)
            if op == "==":
                return lambda fr, cx: _same(left(fr, cx), right(fr, cx))
            if op == "!=":
                return lambda fr, cx: not _same(left(fr, cx), right(fr, cx))
            raise ValueError(op)
        if t is A.UnaryOp:
            operand = self.expr(e.operand, scope)
            if e.op == "not":
                return lambda fr, cx: not operand(fr, cx)
            return lambda fr, cx: _checked(-operand(fr, cx))
        if t is A.Let:
            value = self.expr(e.value, scope)
            body = self.expr(e.body, scope + [e.name])
            return lambda fr, cx: body(fr + (value(fr, cx),), cx)
        if t is A.If:
            cond = self.expr(e.cond, scope)
            then = self.expr(e.then, scope)
            if e.orelse is None:
                def when(fr, cx):
                    if cond(fr, cx):
                        then(fr, cx)
                return when
            orelse = self.expr(e.orelse, scope)
            return lambda fr, cx: then(fr, cx) if cond(fr, cx) else orelse(fr, cx)
        if t is A.Assign:
            return self._assign(e, scope)
        if t is A.Event:
            kind = e.kind
            if kind == "NONE":
                return lambda fr, cx: None

            def event(fr, cx):
                if cx.effects is not None:
                    target = getattr(fr[0], "name", "?") if fr else "?"
                    cx.effects.append(Effect(kind, target, slot=cx.slot))
            return event
        if t is A.Lambda:
            raise EvalError("nested lambda")
        raise TypeError(e)

    def _assign(self, e: A.Assign, scope):
        obj = self.expr(e.target.obj, scope)
        value = self.expr(e.value, scope)
        prop = e.target.name
        if prop not in ("weightSched", "weightAdm"):
            def bad(fr, cx):
                raise EvalError(f"read-only property {prop}")
            return bad
        attr = "weight_sched" if prop == "weightSched" else "weight_adm"
        incr = e.op == "+="

        def assign(fr, cx):
            q = obj(fr, cx)
            v = value(fr, cx)
            try:
                old = getattr(q, attr)
            except AttributeError:
                raise EvalError(f"{type(q).__name__} has no property {prop}") from None
            new = _checked(old + v) if incr else _checked(v)
            setattr(q, attr, new)
            if cx.effects is not None:
                cx.effects.append(Effect("weight", q.name, prop, new - old, new, cx.slot))

        return assign


def _same(a, b):
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    return a is b


_default = Compiler()


def eval_comparator(c: A.ComparatorDef, a, b, env: Optional[Context] = None, compiler=None) -> bool:
    """Evaluate a comparator on two objects; never mutates state."""
    fn = (compiler or _default).comparator(c)
    return bool(fn(a, b, env or Context()))


def eval_predicate(p: A.PredicateDef, obj, env: Optional[Context] = None, compiler=None) -> bool:
    fn = (compiler or _default).predicate(p)
    return bool(fn(obj, env or Context()))


def exec_action(a: A.ActionDef, obj, env: Optional[Context] = None, compiler=None):
    """Run an action; returns the effects it produced, in statement order."""
    env = env or Context()
    fn = (compiler or _default).action(a)
    saved = env.effects
    env.effects = []
    try:
        fn(obj, env)
        return env.effects
    finally:
        produced = env.effects
        env.effects = saved
        if saved is not None:
            saved.extend(produced)
