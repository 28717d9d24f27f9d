"""Syntax tree for the mini-language.

Every node carries a :class:`SourceLocation` and a program-unique ``nid``.
Neither takes part in ``==``, so equality is purely structural.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterator, Optional


@dataclass(frozen=True, order=True)
class SourceLocation:
    file: str
    line: int
    col: int = 1

    @property
    def key(self) -> str:
        return f"{self.file}:{self.line}"


NOWHERE = SourceLocation("<none>", 0, 0)


@dataclass
class Node:
    loc: SourceLocation = field(default=NOWHERE, compare=False, repr=False, kw_only=True)
    nid: int = field(default=-1, compare=False, repr=False, kw_only=True)


class Expr(Node):
    pass


class Stmt(Node):
    pass


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class FloatLit(Expr):
    value: float


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class NullLit(Expr):
    pass


@dataclass
class ListLit(Expr):
    items: list


@dataclass
class Name(Expr):
    id: str


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Logical(Expr):
    """Short-circuit ``&&`` / ``||``."""

    op: str
    left: Expr
    right: Expr


@dataclass
class Call(Expr):
    func: str
    args: list


@dataclass
class Index(Expr):
    target: Expr
    index: Expr


@dataclass
class Block(Stmt):
    stmts: list


@dataclass
class Let(Stmt):
    name: str
    value: Expr


@dataclass
class Assign(Stmt):
    name: str
    value: Expr


@dataclass
class If(Stmt):
    cond: Expr
    then: Block
    orelse: Optional[Stmt] = None  # Block, If (else-if) or None


@dataclass
class While(Stmt):
    cond: Expr
    body: Block


@dataclass
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass
class ExprStmt(Stmt):
    expr: Expr


@dataclass
class FuncDef(Node):
    name: str
    params: list
    body: Block

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass
class Global(Node):
    name: str
    value: Expr


@dataclass
class Unit(Node):
    file: str
    decls: list


COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")
ARITHMETIC = ("+", "-", "*", "/", "%")
BUILTINS = {"len": 1, "int": 1, "float": 1, "isnum": 1, "append": 2, "str": 1, "abs": 1}
CASTS = ("int", "float")


_CHILD_FIELDS: dict = {}


def _child_fields(cls) -> tuple:
    names = _CHILD_FIELDS.get(cls)
    if names is None:
        names = tuple(f.name for f in fields(cls) if f.name not in ("loc", "nid"))
        _CHILD_FIELDS[cls] = names
    return names


def children(node: Node) -> Iterator[Node]:
    for name in _child_fields(type(node)):
        value = getattr(node, name)
        if isinstance(value, Node):
            yield value
        elif isinstance(value, list):
            for item in value:
                if isinstance(item, Node):
                    yield item


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(list(children(n))))


def line_exprs(stmt: Stmt) -> list:
    """Expressions that belong to ``stmt``'s own line (not nested blocks)."""
    if isinstance(stmt, (Let, Assign)):
        return [stmt.value]
    if isinstance(stmt, (If, While)):
        return [stmt.cond]
    if isinstance(stmt, Return):
        return [stmt.value] if stmt.value is not None else []
    if isinstance(stmt, ExprStmt):
        return [stmt.expr]
    return []


def expr_names(expr: Expr) -> list:
    """Variable names referenced in ``expr``, in first-occurrence order."""
    seen: dict = {}
    for n in walk(expr):
        if isinstance(n, Name):
            seen.setdefault(n.id, None)
    return list(seen)


def is_literal(expr: Expr) -> bool:
    if isinstance(expr, (IntLit, FloatLit, BoolLit, StrLit, NullLit)):
        return True
    return (
        isinstance(expr, Unary)
        and expr.op == "-"
        and isinstance(expr.operand, (IntLit, FloatLit))
    )


class Program:
    """A parsed set of source units with a function table keyed by (name, arity)."""

    def __init__(self, units: list, sources: dict | None = None):
        self.units = units
        self.sources = dict(sources or {})
        self.functions: dict = {}
        self.globals: list = []
        self.func_of: dict = {}
        self.parent: dict = {}
        self._by_id: dict = {}
        self.next_id = 0
        self._index()

    def _index(self) -> None:
        self.functions.clear()
        self.globals.clear()
        for unit in self.units:
            for decl in unit.decls:
                if isinstance(decl, FuncDef):
                    overloads = self.functions.setdefault(decl.name, {})
                    if decl.arity in overloads:
                        other = overloads[decl.arity]
                        raise DuplicateOverloadError(
                            f"{decl.loc.file}:{decl.loc.line}:{decl.loc.col}: function "
                            f"{decl.name!r} with {decl.arity} parameter(s) already defined "
                            f"at {other.loc.file}:{other.loc.line}"
                        )
                    overloads[decl.arity] = decl
                else:
                    self.globals.append(decl)
        self.reindex()

    def reindex(self) -> None:
        self._by_id.clear()
        self.parent.clear()
        self.func_of.clear()
        top = 0
        for unit in self.units:
            self._by_id[unit.nid] = unit
            top = max(top, unit.nid)
            for decl in unit.decls:
                self.parent[decl.nid] = unit
                for n in walk(decl):
                    self._by_id[n.nid] = n
                    top = max(top, n.nid)
                    if isinstance(decl, FuncDef):
                        self.func_of[n.nid] = decl
                    for c in children(n):
                        self.parent[c.nid] = n
        self.next_id = max(self.next_id, top + 1)

    def node(self, nid: int) -> Node:
        return self._by_id[nid]

    def has_node(self, nid: int) -> bool:
        return nid in self._by_id

    def lookup(self, name: str, arity: int):
        return self.functions.get(name, {}).get(arity)

    def all_functions(self) -> list:
        return [d for u in self.units for d in u.decls if isinstance(d, FuncDef)]

    def statements(self) -> list:
        """Every statement except blocks, in source order."""
        out = []
        for f in self.all_functions():
            out.extend(n for n in walk(f.body) if isinstance(n, Stmt) and not isinstance(n, Block))
        return out

    def locations(self) -> list:
        """Location keys ("file:line") of all statements, in source order."""
        seen: dict = {}
        for s in self.statements():
            seen.setdefault(s.loc.key, None)
        return list(seen)

    def statements_at(self, key: str) -> list:
        return [s for s in self.statements() if s.loc.key == key]

    def __eq__(self, other) -> bool:
        return isinstance(other, Program) and self.units == other.units

    def __repr__(self) -> str:
        return f"Program({[u.file for u in self.units]})"


class DuplicateOverloadError(ValueError):
    pass
