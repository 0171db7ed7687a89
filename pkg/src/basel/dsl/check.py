"""Name resolution, type inference and binding checks for ArchSpec."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .. import builtins
from ..errors import Diagnostic
from . import ast as A

OBJECT_TYPES = frozenset({"packet", "queue", "port", "buffer"})

ATTR_OWNERS = {
    "arrival": {"packet"},
    "value": {"packet"},
    "processing": {"packet"},
    "slack": {"packet"},
    "queue": {"packet"},
    "size": {"packet", "queue", "buffer"},
    "currSize": {"queue", "buffer"},
    "weightAdm": {"queue"},
    "weightSched": {"queue"},
    "buffer": {"queue"},
}
METHOD_OWNERS = {
    "getHOL": ({"queue"}, "packet"),
    "getCurrQueue": ({"port", "buffer"}, "queue"),
    "getBestQueue": ({"port", "buffer"}, "queue"),
}
WRITABLE = {"weightAdm", "weightSched"}

# property -> (role, operand type)
PROPERTIES = {
    "Queue": {
        "procPrio": ("comparator", "packet"),
        "admPrio": ("comparator", "packet"),
        "congestion": ("predicate", "queue"),
        "postAdmAct": ("action", "queue"),
        "weightAdm": ("weight", None),
        "weightSched": ("weight", None),
    },
    "Port": {
        "schedPrio": ("comparator", "queue"),
        "postSchedAct": ("action", "port"),
    },
    "Buffer": {
        "queuePrio": ("comparator", "queue"),
        "congestion": ("predicate", "buffer"),
        "postAdmAct": ("action", "buffer"),
    },
}
READ_ONLY = {
    "Queue": {"currSize", "size", "buffer", "getHOL"},
    "Port": {"getBestQueue", "getCurrQueue"},
    "Buffer": {"currSize", "size", "getBestQueue", "getCurrQueue"},
}


class TypeVar:
    __slots__ = ("types",)

    def __init__(self, types):
        self.types = set(types)


ANY = OBJECT_TYPES | {"num", "bool"}


@dataclass(frozen=True)
class Resolved:
    """A binding after name resolution."""

    binding: A.PropertyBinding
    role: str
    definition: Optional[object] = None  # ComparatorDef / PredicateDef / ActionDef
    weight: Optional[A.Node] = None


class Checker:
    def __init__(self, spec: A.ArchSpec):
        self.spec = spec
        self.diags = []
        self.externals = set()
        self._types = {}  # id(def) -> list of TypeVar for params
        self._busy = set()
        self._seen_builtins = set()

    def error(self, pos, msg):
        line, col = pos if pos else (0, 0)
        self.diags.append(Diagnostic(line, col, msg))

    def lookup(self, name):
        d = self.spec.definition(name)
        if d is None:
            d = builtins.lookup(name)
            if d is not None:
                self._seen_builtins.add(name)
        return d

    # -- inference -----------------------------------------------------
    def infer(self, d):
        """Infer the parameter types of a definition (cached)."""
        key = id(d)
        if key in self._types:
            return self._types[key]
        if key in self._busy:
            self.error(d.pos, f"recursive definition {d.name}")
            return [TypeVar(OBJECT_TYPES)] * (2 if isinstance(d, A.ComparatorDef) else 1)
        self._busy.add(key)
        if isinstance(d, A.ComparatorDef):
            tvs = [TypeVar(OBJECT_TYPES), TypeVar(OBJECT_TYPES)]
            scope = dict(zip(d.params, tvs))
        else:
            tvs = [TypeVar(OBJECT_TYPES)]
            scope = {d.param: tvs[0]}
        result = self.typeof(d.body, scope)
        if isinstance(d, A.ActionDef):
            pass
        else:
            if A.contains_effects(d.body):
                self.error(d.pos, f"{d.name}: assignments and events are only allowed in actions")
            elif "bool" not in result.types:
                self.error(d.pos, f"{d.name}: body must be a boolean expression")
        if isinstance(d, A.ComparatorDef):
            common = tvs[0].types & tvs[1].types
            if not common:
                self.error(d.pos, f"comparator {d.name} compares objects of different types")
            else:
                tvs[0].types = tvs[1].types = common
        self._busy.discard(key)
        self._types[key] = tvs
        return tvs

    def require(self, tv, allowed, node, what):
        ok = tv.types & set(allowed)
        if not ok:
            self.error(node.pos, f"type mismatch: {what} expects {_fmt(allowed)}, found {_fmt(tv.types)}")
            return False
        tv.types &= set(allowed)
        return True

    def typeof(self, e, scope) -> TypeVar:
        if isinstance(e, A.Num):
            return TypeVar({"num"})
        if isinstance(e, A.Name):
            if e.id in scope:
                return scope[e.id]
            if self.lookup(e.id) is not None:
                self.error(e.pos, f"{e.id} is a definition, not a value")
                return TypeVar(ANY)
            self.externals.add(e.id)
            return TypeVar({"num"})
        if isinstance(e, A.Attr):
            base = self._object_base(e.obj, scope)
            owners = ATTR_OWNERS.get(e.name)
            if owners is None:
                self.error(e.pos, f"unknown attribute {e.name}")
                return TypeVar(ANY)
            if base is not None:
                self.require(base, owners, e, f"attribute {e.name}")
            return TypeVar({"buffer"} if e.name == "buffer" else {"num"})
        if isinstance(e, A.MethodCall):
            base = self._object_base(e.obj, scope)
            if e.name not in METHOD_OWNERS:
                self.error(e.pos, f"unknown method {e.name}()")
                return TypeVar(ANY)
            owners, result = METHOD_OWNERS[e.name]
            if base is not None:
                self.require(base, owners, e, f"{e.name}()")
            return TypeVar({result})
        if isinstance(e, A.FuncCall):
            d = self.lookup(e.name)
            if d is None:
                self.error(e.pos, f"unresolved name {e.name}")
                return TypeVar(ANY)
            if isinstance(d, A.ActionDef):
                self.error(e.pos, f"action {e.name} cannot be called inside an expression")
                return TypeVar(ANY)
            want = 2 if isinstance(d, A.ComparatorDef) else 1
            if len(e.args) != want:
                self.error(e.pos, f"arity mismatch: {e.name} takes {want} argument(s), got {len(e.args)}")
                return TypeVar({"bool"})
            ptypes = self.infer(d)
            for arg, ptv in zip(e.args, ptypes):
                self.require(self.typeof(arg, scope), ptv.types, arg, f"argument of {e.name}")
            return TypeVar({"bool"})
        if isinstance(e, A.BinOp):
            lt = self.typeof(e.left, scope)
            rt = self.typeof(e.right, scope)
            if e.op in A.ARITH_OPS:
                self.require(lt, {"num"}, e.left, f"'{e.op}'")
                self.require(rt, {"num"}, e.right, f"'{e.op}'")
                return TypeVar({"num"})
            if e.op in ("<", ">", "<=", ">="):
                self.require(lt, {"num"}, e.left, f"'{e.op}'")
                self.require(rt, {"num"}, e.right, f"'{e.op}'")
                return TypeVar({"bool"})
            if e.op in ("==", "!="):
                if not (lt.types & rt.types):
                    self.error(e.pos, f"type mismatch: '{e.op}' compares {_fmt(lt.types)} with {_fmt(rt.types)}")
                return TypeVar({"bool"})
            self.require(lt, {"bool"}, e.left, f"'{e.op}'")
            self.require(rt, {"bool"}, e.right, f"'{e.op}'")
            return TypeVar({"bool"})
        if isinstance(e, A.UnaryOp):
            t = self.typeof(e.operand, scope)
            if e.op == "not":
                self.require(t, {"bool"}, e.operand, "'not'")
                return TypeVar({"bool"})
            self.require(t, {"num"}, e.operand, "unary '-'")
            return TypeVar({"num"})
        if isinstance(e, A.Let):
            v = self.typeof(e.value, scope)
            inner = dict(scope)
            inner[e.name] = v
            return self.typeof(e.body, inner)
        if isinstance(e, A.If):
            self.require(self.typeof(e.cond, scope), {"bool"}, e.cond, "if condition")
            t = self.typeof(e.then, scope)
            if e.orelse is None:
                return TypeVar({"stmt"})
            o = self.typeof(e.orelse, scope)
            return TypeVar(t.types | o.types)
        if isinstance(e, A.Assign):
            tgt = e.target
            if tgt.name not in WRITABLE:
                if tgt.name in ATTR_OWNERS:
                    self.error(e.pos, f"read-only property {tgt.name}")
                else:
                    self.error(e.pos, f"unknown attribute {tgt.name}")
            else:
                base = self._object_base(tgt.obj, scope)
                if base is not None:
                    self.require(base, {"queue"}, tgt, f"assignment to {tgt.name}")
            self.require(self.typeof(e.value, scope), {"num"}, e.value, f"assignment to {tgt.name}")
            return TypeVar({"stmt"})
        if isinstance(e, A.Event):
            return TypeVar({"stmt"})
        if isinstance(e, A.Lambda):
            self.error(e.pos, "lambda is only allowed as a definition or binding body")
            return TypeVar(ANY)
        raise TypeError(e)

    def _object_base(self, node, scope):
        if isinstance(node, A.Name) and node.id not in scope:
            self.error(node.pos, f"unresolved name {node.id}")
            return None
        return self.typeof(node, scope)

    # -- bindings ------------------------------------------------------
    def resolve(self, b: A.PropertyBinding, kind: str) -> Optional[Resolved]:
        props = PROPERTIES[kind]
        if b.prop not in props:
            if b.prop in READ_ONLY[kind]:
                self.error(b.pos, f"read-only property {b.prop}")
            else:
                self.error(b.pos, f"unknown property {b.prop} for {kind}")
            return None
        role, operand = props[b.prop]
        v = b.value
        if role == "weight":
            if b.params is not None:
                self.error(b.pos, f"{b.prop} takes no parameters")
            if not _is_constant_expr(v):
                self.error(b.pos, f"{b.obj}.{b.prop} must be a constant expression")
                return None
            for n in A.walk(v):
                if isinstance(n, A.Name):
                    self.externals.add(n.id)
            return Resolved(b, role, weight=v)

        want = {"comparator": A.ComparatorDef, "predicate": A.PredicateDef, "action": A.ActionDef}[role]
        d = None
        if isinstance(v, A.Name):
            d = self.lookup(v.id)
            if d is None:
                self.error(v.pos, f"unresolved name {v.id}")
                return None
        elif isinstance(v, A.FuncCall) and self.lookup(v.name) is not None:
            d = self.lookup(v.name)
            if not all(isinstance(a, A.Name) for a in v.args):
                self.error(v.pos, f"{v.name} must be applied to plain names in a binding")
                return None
            names = tuple(a.id for a in v.args)
            if role == "comparator":
                if len(names) != 2:
                    self.error(v.pos, f"arity mismatch: {v.name} takes 2 argument(s), got {len(names)}")
                    return None
                if b.params is not None and names != tuple(b.params):
                    self.error(v.pos, f"{v.name} must be applied to the binding parameters {', '.join(b.params)}")
                    return None
            else:
                if len(names) != 1:
                    self.error(v.pos, f"arity mismatch: {v.name} takes 1 argument(s), got {len(names)}")
                    return None
                if names[0] != b.obj:
                    self.error(v.pos, f"{v.name} must be applied to {b.obj}")
                    return None
        elif isinstance(v, A.FuncCall):
            self.error(v.pos, f"unresolved name {v.name}")
            return None
        elif role == "comparator" and b.params is not None:
            if len(b.params) != 2:
                self.error(b.pos, f"arity mismatch: {b.prop} takes two parameters")
                return None
            d = A.ComparatorDef(f"{b.obj}.{b.prop}", tuple(b.params), v, b.pos)
        elif role in ("predicate", "action") and isinstance(v, A.Lambda):
            cls = A.ActionDef if A.contains_effects(v.body) else A.PredicateDef
            if role == "action":
                cls = A.ActionDef
            d = cls(f"{b.obj}.{b.prop}", v.param, v.body, b.pos)
        else:
            self.error(v.pos, f"{b.obj}.{b.prop} expects a {role}")
            return None

        if not isinstance(d, want):
            self.error(v.pos, f"{b.obj}.{b.prop} expects a {role}, but {d.name} is a {_kind(d)}")
            return None
        tvs = self.infer(d)
        if operand not in tvs[0].types:
            self.error(v.pos, f"{d.name} operates on {_fmt(tvs[0].types)}, but {b.obj}.{b.prop} needs {operand}")
            return None
        return Resolved(b, role, definition=d)

    # -- whole program -------------------------------------------------
    def run(self):
        spec = self.spec
        decls = {}
        for d in spec.declarations:
            if d.name in decls:
                self.error(d.pos, f"duplicate object name {d.name}")
                continue
            if spec.definition(d.name) is not None:
                self.error(d.pos, f"duplicate object name {d.name} (also a definition)")
            decls[d.name] = d
        owner = {"Port": {}, "Buffer": {}}
        for d in spec.declarations:
            if d.capacity is not None:
                if not _is_constant_expr(d.capacity):
                    self.error(d.pos, f"capacity of {d.name} must be a constant expression")
                else:
                    for n in A.walk(d.capacity):
                        if isinstance(n, A.Name):
                            self.externals.add(n.id)
            seen = set()
            for i, m in enumerate(d.members):
                pos = d.member_pos[i] if i < len(d.member_pos) else d.pos
                if m not in decls:
                    self.error(pos, f"unresolved name {m}")
                    continue
                if decls[m].kind != "Queue":
                    self.error(pos, f"{m} is a {decls[m].kind}, not a Queue")
                    continue
                if m in seen:
                    self.error(pos, f"{m} listed twice in {d.name}")
                    continue
                seen.add(m)
                prev = owner[d.kind].get(m)
                if prev is not None:
                    self.error(pos, f"queue {m} already belongs to {d.kind.lower()} {prev}")
                else:
                    owner[d.kind][m] = d.name

        for table in (spec.comparators, spec.predicates, spec.actions):
            for d in table.values():
                self.infer(d)

        resolved = []
        for b in spec.bindings:
            target = decls.get(b.obj)
            if target is None:
                self.error(b.pos, f"unresolved name {b.obj}")
                continue
            r = self.resolve(b, target.kind)
            if r is not None:
                resolved.append(r)
        self.externals -= set(spec.constants)
        return resolved


def _is_constant_expr(e) -> bool:
    if isinstance(e, (A.Num, A.Name)):
        return True
    if isinstance(e, A.BinOp) and e.op in A.ARITH_OPS:
        return _is_constant_expr(e.left) and _is_constant_expr(e.right)
    if isinstance(e, A.UnaryOp) and e.op == "-":
        return _is_constant_expr(e.operand)
    return False


def _fmt(types) -> str:
    return "/".join(sorted(types)) or "nothing"


def _kind(d) -> str:
    return {A.ComparatorDef: "comparator", A.PredicateDef: "predicate", A.ActionDef: "action"}[type(d)]


def validate(spec: A.ArchSpec, constants=None):
    """Return the diagnostics for a parsed program (empty when valid).

    Identifiers that are neither parameters nor definitions are external
    constants. When ``constants`` is given, every external must be bound
    there or by a ``const`` statement.
    """
    c = Checker(spec)
    c.run()
    if constants is not None:
        for name in sorted(c.externals - set(constants)):
            c.error((0, 0), f"unbound constant {name}")
    return sorted(c.diags, key=lambda d: (d.line, d.col))


def external_constants(spec: A.ArchSpec):
    c = Checker(spec)
    c.run()
    return sorted(c.externals)


def resolve_bindings(spec: A.ArchSpec):
    c = Checker(spec)
    return c.run()
