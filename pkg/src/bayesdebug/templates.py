"""Template-based patch generation over mini-language ASTs.

Nine templates, applied to the statements on each candidate line:

==================== ========================================================
ParameterReplacer    replace a call argument with an in-scope variable
ParameterAdder       switch to the (k+1)-ary overload by inserting a variable
ParameterRemover     switch to the (k-1)-ary overload by dropping an argument
MethodReplacer       call another project function of the same arity
ConditionalReplacer  replace an if/while condition with another boolean
ConditionalAdder     extend a condition with ``&&`` / ``||``
ConditionalRemover   drop one top-level conjunct/disjunct
NullChecker          ``if (x == null) { return <neutral>; }`` before the line
CastChecker          ``if (!isnum(x)) { return <neutral>; }`` before a cast
==================== ========================================================

Candidates are emitted in location-rank order, then template order, then
AST position, so the list is a pure function of program and ranking.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .minilang import ast as A
from .minilang.edits import node_text
from .minilang.parser import parse_expr
from .minilang.render import render_expr
from .patches import TEMPLATES, PatchCandidate, count_per_location
from .sbfl import ScoredRanking

NUM, BOOL, STR, LIST, UNKNOWN = "num", "bool", "str", "list", "unknown"
SEQ = "seq"  # a string or a list, known only from how the value is used


@dataclass(frozen=True)
class TemplateConfig:
    # "line": variables and literals on the line; "scope": every in-scope variable
    condition_operands: str = "line"
    include_builtin_args: bool = True


class ScopeInfo:
    """Visible variables and coarse value categories for one function."""

    def __init__(self, program: A.Program, func: A.FuncDef):
        self.func = func
        self.global_names = [g.name for g in program.globals]
        self.visible: dict = {}
        self.categories: dict = {}
        self._assigned: dict = {g.name: [g.value] for g in program.globals}
        self._walk_block(func.body, list(func.params))
        for p in func.params:
            self._assigned.setdefault(p, []).append(None)
        self.usage: dict = {}
        self._infer()
        self._infer_usage()
        self.returns_value = any(
            isinstance(n, A.Return) and n.value is not None for n in A.walk(func.body)
        )

    def _walk_block(self, block: A.Block, outer: list) -> None:
        names = list(outer)
        for s in block.stmts:
            self.visible[s.nid] = _dedup(names + self.global_names)
            if isinstance(s, (A.Let, A.Assign)):
                self._assigned.setdefault(s.name, []).append(s.value)
            if isinstance(s, A.Let):
                names.append(s.name)
            elif isinstance(s, A.If):
                self._walk_if(s, names)
            elif isinstance(s, A.While):
                self._walk_block(s.body, names)

    def _walk_if(self, s: A.If, names: list) -> None:
        self._walk_block(s.then, names)
        if isinstance(s.orelse, A.If):
            self.visible[s.orelse.nid] = _dedup(names + self.global_names)
            self._walk_if(s.orelse, names)
        elif s.orelse is not None:
            self._walk_block(s.orelse, names)

    def _infer(self) -> None:
        self.categories = {name: UNKNOWN for name in self._assigned}
        for _ in range(3):
            for name, values in self._assigned.items():
                cats = {UNKNOWN if v is None else self.category(v) for v in values}
                self.categories[name] = cats.pop() if len(cats) == 1 else UNKNOWN

    def _infer_usage(self) -> None:
        """Categories of otherwise-unknown names from the operators applied to them."""
        hints: dict = {}

        def hint(e, cat):
            if isinstance(e, A.Name) and self.categories.get(e.id, UNKNOWN) == UNKNOWN:
                hints.setdefault(e.id, set()).add(cat)

        nodes = [n for n in A.walk(self.func.body) if isinstance(n, A.Expr)]
        for _ in range(2):
            for n in nodes:
                if isinstance(n, A.Binary) and n.op in ("-", "*", "/", "%"):
                    hint(n.left, NUM)
                    hint(n.right, NUM)
                elif isinstance(n, A.Binary) and n.op in ("<", "<=", ">", ">="):
                    if self.category(n.right) == NUM:
                        hint(n.left, NUM)
                    if self.category(n.left) == NUM:
                        hint(n.right, NUM)
                elif isinstance(n, A.Unary) and n.op == "-":
                    hint(n.operand, NUM)
                elif isinstance(n, A.Index):
                    hint(n.target, SEQ)
                    hint(n.index, NUM)
                elif isinstance(n, A.Call) and n.func in ("len", "append") and n.args:
                    hint(n.args[0], SEQ if n.func == "len" else LIST)
                elif isinstance(n, A.Call) and n.func == "abs" and n.args:
                    hint(n.args[0], NUM)
            self.usage = {
                name: (cats.pop() if len(cats) == 1 else LIST if cats == {SEQ, LIST} else UNKNOWN)
                for name, cats in ((k, set(v)) for k, v in hints.items())
            }

    def ingredient_category(self, name: str) -> str:
        """Declared category, else the one implied by usage."""
        cat = self.categories.get(name, UNKNOWN)
        return self.usage.get(name, UNKNOWN) if cat == UNKNOWN else cat

    def category(self, e: A.Expr) -> str:
        if isinstance(e, (A.IntLit, A.FloatLit)):
            return NUM
        if isinstance(e, A.BoolLit) or isinstance(e, A.Logical):
            return BOOL
        if isinstance(e, A.StrLit):
            return STR
        if isinstance(e, A.ListLit):
            return LIST
        if isinstance(e, A.Name):
            return self.ingredient_category(e.id)
        if isinstance(e, A.Unary):
            return BOOL if e.op == "!" else NUM
        if isinstance(e, A.Binary):
            if e.op in A.COMPARISONS:
                return BOOL
            left, right = self.category(e.left), self.category(e.right)
            if e.op == "+" and STR in (left, right):
                return STR
            if e.op == "+" and LIST in (left, right):
                return LIST
            return NUM if NUM in (left, right) else UNKNOWN
        if isinstance(e, A.Call) and e.func in A.BUILTINS:
            return {"len": NUM, "int": NUM, "float": NUM, "abs": NUM, "isnum": BOOL,
                    "append": LIST, "str": STR}[e.func]
        return UNKNOWN


def _dedup(names: Iterable[str]) -> list:
    return list(dict.fromkeys(names))


def compatible(a: str, b: str) -> bool:
    if SEQ in (a, b):
        return {a, b} <= {SEQ, STR, LIST, UNKNOWN}
    return a == b or UNKNOWN in (a, b)


class _Builder:
    def __init__(self, program: A.Program, config: TemplateConfig):
        self.program = program
        self.config = config
        self.scopes = {f.nid: ScopeInfo(program, f) for f in program.all_functions()}
        self.out: list = []
        self._seen: set = set()

    def emit(self, loc: str, template: str, edit: dict, probe="none", old=None, new=None, stmt=None):
        key = (template, json.dumps(edit, sort_keys=True))
        if key in self._seen:
            return
        self._seen.add(key)
        pid = f"p{len(self.out) + 1:05d}"
        self.out.append(PatchCandidate(pid, loc, template, edit, probe, old, new, stmt))

    def scope_for(self, stmt: A.Stmt) -> ScopeInfo:
        return self.scopes[self.program.func_of[stmt.nid].nid]

    # helpers
    def calls(self, stmt: A.Stmt) -> list:
        return [n for e in A.line_exprs(stmt) for n in A.walk(e) if isinstance(n, A.Call)]

    def user_call(self, call: A.Call) -> bool:
        return self.program.lookup(call.func, len(call.args)) is not None

    def call_text(self, call: A.Call, args: list, func: str | None = None) -> str:
        return render_expr(A.Call(func or call.func, args))

    def condition_ingredients(self, stmt: A.Stmt, scope: ScopeInfo) -> list:
        """Replacement booleans: boolean variables plus simple comparisons."""
        visible = scope.visible.get(stmt.nid, [])
        exprs = A.line_exprs(stmt)
        on_line = _dedup(n for e in exprs for n in A.expr_names(e))
        if self.config.condition_operands == "scope":
            variables = list(visible)
        else:
            variables = [v for v in on_line if v in visible]
        literals = {}
        for e in exprs:
            for n in A.walk(e):
                if isinstance(n, (A.IntLit, A.FloatLit, A.StrLit, A.NullLit)) or (
                    isinstance(n, A.Unary) and A.is_literal(n)
                ):
                    literals.setdefault(render_expr(n), n)
        out = []
        for v in visible:
            if scope.ingredient_category(v) == BOOL:
                out.append(v)
        for i, x in enumerate(variables):
            cx = scope.ingredient_category(x)
            if cx == BOOL:
                continue
            operands = [(y, scope.ingredient_category(y)) for y in variables[i + 1:]]
            operands += [(text, scope.category(node)) for text, node in literals.items()]
            for y, cy in operands:
                if cy == BOOL or not compatible(cx, cy) and y != "null":
                    continue
                numeric = cx in (NUM, UNKNOWN) and cy in (NUM, UNKNOWN) and y != "null"
                ops = A.COMPARISONS if numeric else ("==", "!=")
                out.extend(f"{x} {op} {y}" for op in ops)
        return _dedup(out)

    # templates
    def parameter_replacer(self, loc, stmt, scope):
        for call in self.calls(stmt):
            if not self.user_call(call) and not self.config.include_builtin_args:
                continue
            for arg in call.args:
                old = render_expr(arg)
                for v in scope.visible.get(stmt.nid, []):
                    if v == old or not compatible(scope.category(arg), scope.ingredient_category(v)):
                        continue
                    edit = {"op": "replace_expr", "node": arg.nid, "old": old, "new": v}
                    self.emit(loc, "ParameterReplacer", edit, "replace", old, v, stmt.nid)

    def parameter_adder(self, loc, stmt, scope):
        for call in self.calls(stmt):
            if not self.user_call(call) or self.program.lookup(call.func, len(call.args) + 1) is None:
                continue
            for j in range(len(call.args) + 1):
                for v in scope.visible.get(stmt.nid, []):
                    args = call.args[:j] + [A.Name(v)] + call.args[j:]
                    edit = {"op": "replace_expr", "node": call.nid, "old": render_expr(call),
                            "new": self.call_text(call, args)}
                    self.emit(loc, "ParameterAdder", edit, stmt=stmt.nid)

    def parameter_remover(self, loc, stmt, scope):
        for call in self.calls(stmt):
            if not self.user_call(call) or not call.args:
                continue
            if self.program.lookup(call.func, len(call.args) - 1) is None:
                continue
            for j in range(len(call.args)):
                args = call.args[:j] + call.args[j + 1:]
                edit = {"op": "replace_expr", "node": call.nid, "old": render_expr(call),
                        "new": self.call_text(call, args)}
                self.emit(loc, "ParameterRemover", edit, stmt=stmt.nid)

    def method_replacer(self, loc, stmt, scope):
        for call in self.calls(stmt):
            if not self.user_call(call):
                continue
            for f in self.program.all_functions():
                if f.name == call.func or f.arity != len(call.args):
                    continue
                edit = {"op": "replace_expr", "node": call.nid, "old": render_expr(call),
                        "new": self.call_text(call, call.args, f.name)}
                self.emit(loc, "MethodReplacer", edit, stmt=stmt.nid)

    def _cond_edit(self, loc, template, stmt, new_text):
        cond = stmt.cond
        old = render_expr(cond)
        if new_text == old:
            return
        edit = {"op": "replace_expr", "node": cond.nid, "old": old, "new": new_text}
        self.emit(loc, template, edit, "replace", old, new_text, stmt.nid)

    def conditional_replacer(self, loc, stmt, scope):
        if not isinstance(stmt, (A.If, A.While)):
            return
        cond = stmt.cond
        for node in A.walk(cond):
            if isinstance(node, A.Binary) and node.op in A.COMPARISONS:
                for op in A.COMPARISONS:
                    if op == node.op:
                        continue
                    variant = copy.deepcopy(cond)
                    target = next(n for n in A.walk(variant) if n.nid == node.nid)
                    target.op = op
                    self._cond_edit(loc, "ConditionalReplacer", stmt, render_expr(variant))
        for text in self.condition_ingredients(stmt, scope):
            self._cond_edit(loc, "ConditionalReplacer", stmt, text)

    def conditional_adder(self, loc, stmt, scope):
        if not isinstance(stmt, (A.If, A.While)):
            return
        for text in self.condition_ingredients(stmt, scope):
            extra = parse_expr(text)
            if extra == stmt.cond:
                continue
            for op in ("&&", "||"):
                combined = render_expr(A.Logical(op, stmt.cond, extra))
                self._cond_edit(loc, "ConditionalAdder", stmt, combined)

    def conditional_remover(self, loc, stmt, scope):
        if not isinstance(stmt, (A.If, A.While)) or not isinstance(stmt.cond, A.Logical):
            return
        op = stmt.cond.op
        parts = _flatten(stmt.cond, op)
        for i in range(len(parts)):
            rest = parts[:i] + parts[i + 1:]
            node = rest[0]
            for r in rest[1:]:
                node = A.Logical(op, node, r)
            self._cond_edit(loc, "ConditionalRemover", stmt, render_expr(node))

    def _guard(self, loc, template, stmt, scope, cond_text):
        if not isinstance(self.program.parent.get(stmt.nid), A.Block) or isinstance(stmt, A.While):
            return
        ret = "return null;" if scope.returns_value else "return;"
        new = f"if ({cond_text}) {{ {ret} }}"
        edit = {"op": "insert_before", "node": stmt.nid, "old": node_text(stmt), "new": new}
        self.emit(loc, template, edit, "guard", None, cond_text, stmt.nid)

    def null_checker(self, loc, stmt, scope):
        visible = scope.visible.get(stmt.nid, [])
        names = _dedup(n for e in A.line_exprs(stmt) for n in A.expr_names(e))
        for x in names:
            if x in visible and scope.categories.get(x, UNKNOWN) == UNKNOWN:
                self._guard(loc, "NullChecker", stmt, scope, f"{x} == null")

    def cast_checker(self, loc, stmt, scope):
        visible = scope.visible.get(stmt.nid, [])
        casted = []
        for call in self.calls(stmt):
            if call.func in A.CASTS and not self.user_call(call) and len(call.args) == 1:
                arg = call.args[0]
                if isinstance(arg, A.Name) and arg.id in visible:
                    casted.append(arg.id)
        for x in _dedup(casted):
            self._guard(loc, "CastChecker", stmt, scope, f"!isnum({x})")


def _flatten(e: A.Expr, op: str) -> list:
    if isinstance(e, A.Logical) and e.op == op:
        return _flatten(e.left, op) + _flatten(e.right, op)
    return [e]


_METHODS = {
    "ParameterReplacer": "parameter_replacer",
    "ParameterAdder": "parameter_adder",
    "ParameterRemover": "parameter_remover",
    "MethodReplacer": "method_replacer",
    "ConditionalReplacer": "conditional_replacer",
    "ConditionalAdder": "conditional_adder",
    "ConditionalRemover": "conditional_remover",
    "NullChecker": "null_checker",
    "CastChecker": "cast_checker",
}
assert tuple(_METHODS) == TEMPLATES


def generate_at(
    program: A.Program,
    locations: Sequence[str],
    config: TemplateConfig | None = None,
    templates: Sequence[str] = TEMPLATES,
) -> list:
    """All candidates at ``locations`` (in the given order)."""
    builder = _Builder(program, config or TemplateConfig())
    by_loc: dict = {}
    for s in program.statements():
        by_loc.setdefault(s.loc.key, []).append(s)
    for loc in locations:
        stmts = by_loc.get(loc, [])
        for template in TEMPLATES:
            if template not in templates:
                continue
            method = getattr(builder, _METHODS[template])
            for stmt in stmts:
                method(loc, stmt, builder.scope_for(stmt))
    return builder.out


def select_locations(
    covered_failing: Iterable[str], ranking: ScoredRanking, top_k: int = 200
) -> list:
    """The first ``top_k`` ranked locations executed by a failing test."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    covered = set(covered_failing)
    return [loc for loc in ranking.ids() if loc in covered][:top_k]


def generate_patches(
    program: A.Program,
    covered_failing_lines: Iterable[str],
    sbfl_ranking: ScoredRanking,
    top_k: int = 200,
    config: TemplateConfig | None = None,
) -> list:
    locations = select_locations(covered_failing_lines, sbfl_ranking, top_k)
    return generate_at(program, locations, config)


def candidates_to_json(candidates: Sequence[PatchCandidate]) -> str:
    return json.dumps([c.to_dict() for c in candidates], indent=2)


__all__ = [
    "TemplateConfig",
    "ScopeInfo",
    "compatible",
    "count_per_location",
    "generate_at",
    "generate_patches",
    "select_locations",
    "candidates_to_json",
]
