"""Pretty printer.  ``parse(render(p))`` is structurally equal to ``p``."""

from __future__ import annotations

from . import ast as A
from .values import render_value

_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "%": 6,
}
_UNARY = 7
_POSTFIX = 8

INDENT = "    "


def render_expr(e: A.Expr, outer: int = 0) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.FloatLit):
        return render_value(float(e.value))
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.StrLit):
        return render_value(e.value)
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.ListLit):
        return "[" + ", ".join(render_expr(x) for x in e.items) + "]"
    if isinstance(e, A.Call):
        return f"{e.func}(" + ", ".join(render_expr(x) for x in e.args) + ")"
    if isinstance(e, A.Index):
        return f"{render_expr(e.target, _POSTFIX)}[{render_expr(e.index)}]"
    if isinstance(e, A.Unary):
        text = e.op + render_expr(e.operand, _UNARY)
        if e.op == "-" and text.startswith("--"):
            text = "-(" + text[1:] + ")"
        return f"({text})" if outer > _UNARY else text
    if isinstance(e, (A.Binary, A.Logical)):
        prec = _PREC[e.op]
        text = f"{render_expr(e.left, prec)} {e.op} {render_expr(e.right, prec + 1)}"
        return f"({text})" if prec < outer else text
    raise TypeError(f"cannot render {type(e).__name__}")


def render_stmt(s: A.Stmt, depth: int = 0) -> list:
    pad = INDENT * depth
    if isinstance(s, A.Let):
        return [f"{pad}let {s.name} = {render_expr(s.value)};"]
    if isinstance(s, A.Assign):
        return [f"{pad}{s.name} = {render_expr(s.value)};"]
    if isinstance(s, A.Return):
        if s.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {render_expr(s.value)};"]
    if isinstance(s, A.ExprStmt):
        return [f"{pad}{render_expr(s.expr)};"]
    if isinstance(s, A.While):
        return [f"{pad}while ({render_expr(s.cond)}) {{", *render_body(s.body, depth), f"{pad}}}"]
    if isinstance(s, A.If):
        lines = [f"{pad}if ({render_expr(s.cond)}) {{", *render_body(s.then, depth)]
        node = s
        while isinstance(node.orelse, A.If):
            node = node.orelse
            lines.append(f"{pad}}} else if ({render_expr(node.cond)}) {{")
            lines.extend(render_body(node.then, depth))
        if node.orelse is not None:
            lines.append(f"{pad}}} else {{")
            lines.extend(render_body(node.orelse, depth))
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"cannot render {type(s).__name__}")


def render_body(block: A.Block, depth: int) -> list:
    out = []
    for s in block.stmts:
        out.extend(render_stmt(s, depth + 1))
    return out


def render_unit(unit: A.Unit) -> str:
    chunks = []
    for d in unit.decls:
        if isinstance(d, A.Global):
            chunks.append(f"let {d.name} = {render_expr(d.value)};")
        else:
            head = f"fn {d.name}({', '.join(d.params)}) {{"
            chunks.append("\n".join([head, *render_body(d.body, 0), "}"]))
    return "\n\n".join(chunks) + "\n"


def render_program(program: A.Program) -> dict:
    return {u.file: render_unit(u) for u in program.units}
