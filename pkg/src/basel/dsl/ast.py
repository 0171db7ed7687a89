"""Syntax tree for BASEL programs.

Source positions are carried on every node but excluded from equality, so
two trees compare equal when they are structurally identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple


@dataclass(frozen=True)
class Node:
    pass


def _pos():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Num(Node):
    value: int
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class Name(Node):
    id: str
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class Attr(Node):
    obj: Node
    name: str
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class MethodCall(Node):
    obj: Node
    name: str
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class FuncCall(Node):
    name: str
    args: Tuple[Node, ...]
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class UnaryOp(Node):
    op: str  # "-" or "not"
    operand: Node
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class Let(Node):
    name: str
    value: Node
    body: Node
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class If(Node):
    cond: Node
    then: Node
    orelse: Optional[Node] = None
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class Lambda(Node):
    param: str
    body: Node
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class Assign(Node):
    target: Attr
    op: str  # "=" or "+="
    value: Node
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class Event(Node):
    kind: str  # MARK, NOTIFY or NONE
    pos: Tuple[int, int] = _pos()


ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<", ">", "<=", ">=", "==", "!=")
BOOL_OPS = ("and", "or")
EVENTS = ("MARK", "NOTIFY", "NONE")


# -- top level --------------------------------------------------------------


@dataclass(frozen=True)
class ComparatorDef:
    name: str
    params: Tuple[str, str]
    body: Node
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class PredicateDef:
    name: str
    param: str
    body: Node
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class ActionDef:
    name: str
    param: str
    body: Node
    pos: Tuple[int, int] = _pos()


@dataclass(frozen=True)
class ObjectDecl:
    name: str
    kind: str  # Queue, Port or Buffer
    capacity: Optional[Node]
    members: Tuple[str, ...]
    pos: Tuple[int, int] = _pos()
    member_pos: Tuple[Tuple[int, int], ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class PropertyBinding:
    obj: str
    prop: str
    params: Optional[Tuple[str, ...]]
    value: Node
    pos: Tuple[int, int] = _pos()


@dataclass
class ArchSpec:
    constants: dict = field(default_factory=dict)
    comparators: dict = field(default_factory=dict)
    predicates: dict = field(default_factory=dict)
    actions: dict = field(default_factory=dict)
    declarations: list = field(default_factory=list)
    bindings: list = field(default_factory=list)

    def definition(self, name):
        for table in (self.comparators, self.predicates, self.actions):
            if name in table:
                return table[name]
        return None

    def decl(self, name):
        for d in self.declarations:
            if d.name == name:
                return d
        return None

    def queues(self):
        return [d for d in self.declarations if d.kind == "Queue"]

    def ports(self):
        return [d for d in self.declarations if d.kind == "Port"]

    def buffers(self):
        return [d for d in self.declarations if d.kind == "Buffer"]


def contains_effects(node) -> bool:
    """True if the subtree holds an assignment, an event, or an else-less if."""
    if isinstance(node, (Assign, Event)):
        return True
    if isinstance(node, If) and node.orelse is None:
        return True
    return any(contains_effects(c) for c in children(node))


def children(node):
    if isinstance(node, (Attr, MethodCall)):
        return (node.obj,)
    if isinstance(node, FuncCall):
        return node.args
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, UnaryOp):
        return (node.operand,)
    if isinstance(node, Let):
        return (node.value, node.body)
    if isinstance(node, If):
        return (node.cond, node.then) + ((node.orelse,) if node.orelse is not None else ())
    if isinstance(node, Lambda):
        return (node.body,)
    if isinstance(node, Assign):
        return (node.target, node.value)
    return ()


def walk(node):
    yield node
    for c in children(node):
        yield from walk(c)
