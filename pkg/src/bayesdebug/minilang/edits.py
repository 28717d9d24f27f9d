"""AST edits addressed by node id.

An edit payload is a plain dict so it can be serialized with a candidate:

* ``{"op": "replace_expr", "node": nid, "old": src, "new": src}``
* ``{"op": "insert_before", "node": nid, "old": src, "new": src}``
* ``{"op": "remove_stmt", "node": nid, "old": src}``

``old`` is the rendered text of the target at generation time; a mismatch
means the payload is stale.
"""

from __future__ import annotations

import copy
from dataclasses import fields

from . import ast as A
from .parser import parse_expr, parse_stmt
from .render import render_expr, render_program, render_stmt


class StaleEditError(LookupError):
    pass


def node_text(node: A.Node) -> str:
    if isinstance(node, A.Expr):
        return render_expr(node)
    return render_stmt(node)[0].strip()


def _replace_child(parent: A.Node, old: A.Node, new: A.Node) -> None:
    for f in fields(parent):
        value = getattr(parent, f.name)
        if value is old:
            setattr(parent, f.name, new)
            return
        if isinstance(value, list):
            for i, item in enumerate(value):
                if item is old:
                    value[i] = new
                    return
    raise StaleEditError("target is not a child of its recorded parent")


def _enclosing_decl(program: A.Program, nid: int) -> A.Node:
    node = program.node(nid)
    while not isinstance(program.parent.get(node.nid), A.Unit):
        if node.nid not in program.parent:
            raise StaleEditError(f"node {nid} is not inside a declaration")
        node = program.parent[node.nid]
    return node


def _find(root: A.Node, nid: int) -> tuple:
    for n in A.walk(root):
        for c in A.children(n):
            if c.nid == nid:
                return c, n
    raise StaleEditError(f"node {nid} is not editable")


def apply_edit(program: A.Program, payload: dict) -> A.Program:
    """Return a new program with ``payload`` applied; ``program`` is untouched.

    Only the edited declaration is copied; unchanged declarations are shared
    between the two programs, so neither may be mutated afterwards.
    """
    op = payload.get("op")
    nid = payload.get("node")
    if not program.has_node(nid):
        raise StaleEditError(f"node {nid} is not present in the program")
    if node_text(program.node(nid)) != payload.get("old"):
        raise StaleEditError(
            f"node {nid} reads {node_text(program.node(nid))!r}, payload expects {payload.get('old')!r}"
        )
    decl = _enclosing_decl(program, nid)
    fresh = copy.deepcopy(decl)
    target, parent = _find(fresh, nid)
    loc = target.loc
    start = program.next_id

    if op == "replace_expr":
        if not isinstance(target, A.Expr):
            raise StaleEditError(f"node {nid} is not an expression")
        new = parse_expr(payload["new"], file=loc.file, start_id=start, line=loc.line)
        _replace_child(parent, target, new)
    elif op in ("insert_before", "remove_stmt"):
        if not isinstance(parent, A.Block):
            raise StaleEditError(f"node {nid} is not a statement inside a block")
        index = next(i for i, s in enumerate(parent.stmts) if s is target)
        if op == "insert_before":
            new = parse_stmt(payload["new"], file=loc.file, start_id=start, line=loc.line)
            parent.stmts.insert(index, new)
        else:
            del parent.stmts[index]
    else:
        raise ValueError(f"unknown edit op {op!r}")

    units = []
    for unit in program.units:
        if any(d is decl for d in unit.decls):
            decls = [fresh if d is decl else d for d in unit.decls]
            unit = A.Unit(unit.file, decls, loc=unit.loc, nid=unit.nid)
        units.append(unit)
    out = A.Program(units, program.sources)
    out.next_id = max(out.next_id, start)
    return out


def render_patched(program: A.Program, payload: dict) -> dict:
    return render_program(apply_edit(program, payload))
