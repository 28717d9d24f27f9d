"""Tree-walking interpreter with per-line coverage and debugger-style probes.

Each statement has one *evaluation point* per execution: simple statements and
``if`` at their start, ``while`` at every evaluation of its condition.  Every
point bumps the line and statement counters; when a probe set is attached,
the probes registered on that statement are evaluated side-effect-free in the
current environment and recorded as :class:`TraceEvent`\\ s.
"""

from __future__ import annotations

import math
import sys
from collections import Counter
from dataclasses import dataclass, field

from . import ast as A
from .values import INT_MAX, INT_MIN, is_number, render_value, tag

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


@dataclass(frozen=True)
class Limits:
    max_steps: int = 200_000
    max_depth: int = 150
    hit_limit: int = 100

    def __post_init__(self):
        for name in ("max_steps", "max_depth", "hit_limit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class Fault(Exception):
    """A runtime fault in the interpreted program; the test fails."""

    def __init__(self, kind: str, message: str = "", loc: A.SourceLocation | None = None):
        super().__init__(f"{kind}: {message}" if message else kind)
        self.kind = kind
        self.message = message
        self.loc = loc

    def describe(self) -> str:
        where = f" at {self.loc.file}:{self.loc.line}" if self.loc else ""
        return f"{self}{where}"


class _ProbeCall(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


@dataclass(frozen=True)
class Marker:
    """Non-value probe outcome: ``absent`` (guard probes) or ``fault:<kind>``."""

    kind: str

    @property
    def is_fault(self) -> bool:
        return self.kind.startswith("fault")


ABSENT = Marker("absent")


@dataclass(frozen=True)
class Probe:
    patch_id: str
    kind: str  # "replace" | "guard"
    old: A.Expr | None
    new: A.Expr


@dataclass(frozen=True)
class TraceEvent:
    patch_id: str
    test_id: str
    location: str
    hit_index: int
    old_value: object
    new_value: object


@dataclass
class ProbeSet:
    """Probes keyed by statement nid, plus the first hit each should record."""

    probes: dict = field(default_factory=dict)
    window_start: dict = field(default_factory=dict)

    def add(self, stmt_nid: int, probe: Probe) -> None:
        self.probes.setdefault(stmt_nid, []).append(probe)

    def __bool__(self) -> bool:
        return bool(self.probes)


class Env:
    __slots__ = ("vars", "parent")

    def __init__(self, parent: "Env | None" = None):
        self.vars: dict = {}
        self.parent = parent

    def find(self, name: str):
        env = self
        while env is not None:
            if name in env.vars:
                return env
            env = env.parent
        return None


def lang_eq(a, b) -> bool:
    """The language's ``==``: numeric promotion between int and float, else structural."""
    ta, tb = tag(a), tag(b)
    if ta in ("int", "float") and tb in ("int", "float"):
        return a == b
    if ta != tb:
        return False
    if ta == "list":
        return len(a) == len(b) and all(lang_eq(x, y) for x, y in zip(a, b))
    return a == b


def _check_int(v: int, loc) -> int:
    if v < INT_MIN or v > INT_MAX:
        raise Fault("overflow", "64-bit integer overflow", loc)
    return v


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


class Interpreter:
    def __init__(
        self,
        program: A.Program,
        limits: Limits | None = None,
        probes: ProbeSet | None = None,
        test_id: str = "",
    ):
        self.program = program
        self.limits = limits or Limits()
        self.probes = probes if probes else None
        self.test_id = test_id
        self.steps = 0
        self.depth = 0
        self.line_counts: Counter = Counter()
        self.stmt_counts: Counter = Counter()
        self.events: list = []
        self.globals = Env()
        self.probing = False
        self._stmt = {
            A.Let: self._let,
            A.Assign: self._assign,
            A.If: self._if,
            A.While: self._while,
            A.Return: self._return,
            A.ExprStmt: self._exprstmt,
        }
        self._expr = {
            A.IntLit: self._int,
            A.FloatLit: self._lit,
            A.BoolLit: self._lit,
            A.StrLit: self._lit,
            A.NullLit: lambda e, env: None,
            A.ListLit: self._list,
            A.Name: self._name,
            A.Unary: self._unary,
            A.Binary: self._binary,
            A.Logical: self._logical,
            A.Call: self._call,
            A.Index: self._index,
        }

    # bookkeeping
    def tick(self, loc) -> None:
        if self.probing:
            return
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise Fault("step-limit", f"exceeded {self.limits.max_steps} steps", loc)

    def point(self, stmt: A.Stmt, env: Env) -> None:
        self.tick(stmt.loc)
        self.line_counts[stmt.loc.key] += 1
        self.stmt_counts[stmt.nid] += 1
        if self.probes is None:
            return
        probes = self.probes.probes.get(stmt.nid)
        if not probes:
            return
        hit = self.stmt_counts[stmt.nid]
        if hit < self.probes.window_start.get(stmt.nid, 1):
            return
        for probe in probes:
            old = ABSENT if probe.old is None else self.eval_probe(probe.old, env)
            new = self.eval_probe(probe.new, env)
            self.events.append(
                TraceEvent(probe.patch_id, self.test_id, stmt.loc.key, hit, old, new)
            )

    def eval_probe(self, expr: A.Expr, env: Env):
        """Evaluate without side effects; user-function calls are refused."""
        self.probing = True
        try:
            return self.eval(expr, env)
        except Fault as f:
            return Marker(f"fault:{f.kind}")
        except _ProbeCall:
            return Marker("fault:user-call")
        except RecursionError:
            return Marker("fault:recursion")
        finally:
            self.probing = False

    # entry points
    def init_globals(self) -> None:
        for g in self.program.globals:
            self.globals.vars[g.name] = self.eval(g.value, self.globals)

    def call(self, name: str, args: list, loc=None):
        func = self.program.lookup(name, len(args))
        if func is None:
            if name in A.BUILTINS and A.BUILTINS[name] == len(args):
                return self._builtin(name, args, loc)
            raise Fault("unknown-function", f"no function {name}/{len(args)}", loc)
        if self.probing:
            raise _ProbeCall(name)
        if self.depth >= self.limits.max_depth:
            raise Fault("stack-overflow", f"call depth exceeds {self.limits.max_depth}", loc)
        env = Env(self.globals)
        env.vars.update(zip(func.params, args))
        self.depth += 1
        try:
            self.exec_block(func.body, env, new_scope=False)
        except _Return as r:
            return r.value
        finally:
            self.depth -= 1
        return None

    # statements
    def exec_block(self, block: A.Block, env: Env, new_scope: bool = True) -> None:
        scope = Env(env) if new_scope else env
        for s in block.stmts:
            self._stmt[type(s)](s, scope)

    def _let(self, s: A.Let, env: Env) -> None:
        self.point(s, env)
        env.vars[s.name] = self.eval(s.value, env)

    def _assign(self, s: A.Assign, env: Env) -> None:
        self.point(s, env)
        value = self.eval(s.value, env)
        target = env.find(s.name)
        if target is None:
            raise Fault("undefined-variable", s.name, s.loc)
        if target is self.globals:
            raise Fault("assign-to-constant", s.name, s.loc)
        target.vars[s.name] = value

    def _cond(self, expr: A.Expr, env: Env) -> bool:
        value = self.eval(expr, env)
        if value is None:
            raise Fault("null-dereference", "null condition", expr.loc)
        if not isinstance(value, bool):
            raise Fault("type-error", f"condition is {tag(value)}", expr.loc)
        return value

    def _if(self, s: A.If, env: Env) -> None:
        self.point(s, env)
        if self._cond(s.cond, env):
            self.exec_block(s.then, env)
        elif isinstance(s.orelse, A.If):
            self._if(s.orelse, env)
        elif s.orelse is not None:
            self.exec_block(s.orelse, env)

    def _while(self, s: A.While, env: Env) -> None:
        while True:
            self.point(s, env)
            if not self._cond(s.cond, env):
                return
            self.exec_block(s.body, env)

    def _return(self, s: A.Return, env: Env) -> None:
        self.point(s, env)
        raise _Return(None if s.value is None else self.eval(s.value, env))

    def _exprstmt(self, s: A.ExprStmt, env: Env) -> None:
        self.point(s, env)
        self.eval(s.expr, env)

    # expressions
    def eval(self, e: A.Expr, env: Env):
        self.tick(e.loc)
        return self._expr[type(e)](e, env)

    def _lit(self, e, env):
        return e.value

    def _int(self, e, env):
        return _check_int(e.value, e.loc)

    def _list(self, e, env):
        return tuple(self.eval(x, env) for x in e.items)

    def _name(self, e, env):
        scope = env.find(e.id)
        if scope is None:
            raise Fault("undefined-variable", e.id, e.loc)
        return scope.vars[e.id]

    def _unary(self, e, env):
        if e.op == "-" and isinstance(e.operand, A.IntLit):
            return _check_int(-e.operand.value, e.loc)
        v = self.eval(e.operand, env)
        if v is None:
            raise Fault("null-dereference", f"operator {e.op} on null", e.loc)
        if e.op == "!":
            if not isinstance(v, bool):
                raise Fault("type-error", f"! on {tag(v)}", e.loc)
            return not v
        if tag(v) == "int":
            return _check_int(-v, e.loc)
        if tag(v) == "float":
            return -v
        raise Fault("type-error", f"- on {tag(v)}", e.loc)

    def _logical(self, e, env):
        left = self._bool_operand(self.eval(e.left, env), e)
        if e.op == "&&" and not left:
            return False
        if e.op == "||" and left:
            return True
        return self._bool_operand(self.eval(e.right, env), e)

    def _bool_operand(self, v, e):
        if v is None:
            raise Fault("null-dereference", f"operator {e.op} on null", e.loc)
        if not isinstance(v, bool):
            raise Fault("type-error", f"{e.op} on {tag(v)}", e.loc)
        return v

    def _binary(self, e, env):
        a = self.eval(e.left, env)
        b = self.eval(e.right, env)
        op = e.op
        if op == "==":
            return lang_eq(a, b)
        if op == "!=":
            return not lang_eq(a, b)
        if a is None or b is None:
            raise Fault("null-dereference", f"operator {op} on null", e.loc)
        ta, tb = tag(a), tag(b)
        if op in ("<", "<=", ">", ">="):
            if not (is_number(a) and is_number(b)) and not (ta == tb == "string"):
                raise Fault("type-error", f"{ta} {op} {tb}", e.loc)
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            return a >= b
        if op == "+" and ta == tb and ta in ("string", "list"):
            return a + b
        if not (is_number(a) and is_number(b)):
            raise Fault("type-error", f"{ta} {op} {tb}", e.loc)
        if ta == tb == "int":
            if op == "+":
                return _check_int(a + b, e.loc)
            if op == "-":
                return _check_int(a - b, e.loc)
            if op == "*":
                return _check_int(a * b, e.loc)
            if b == 0:
                raise Fault("division-by-zero", "", e.loc)
            q = _trunc_div(a, b)
            return _check_int(q, e.loc) if op == "/" else a - b * q
        a, b = float(a), float(b)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0.0:
            raise Fault("division-by-zero", "", e.loc)
        return a / b if op == "/" else math.fmod(a, b)

    def _index(self, e, env):
        target = self.eval(e.target, env)
        index = self.eval(e.index, env)
        if target is None:
            raise Fault("null-dereference", "indexing null", e.loc)
        if tag(target) not in ("list", "string") or tag(index) != "int":
            raise Fault("type-error", f"{tag(target)}[{tag(index)}]", e.loc)
        if not 0 <= index < len(target):
            raise Fault("index-out-of-bounds", f"index {index}, length {len(target)}", e.loc)
        return target[index]

    def _call(self, e, env):
        args = [self.eval(a, env) for a in e.args]
        return self.call(e.func, args, e.loc)

    def _builtin(self, name: str, args: list, loc):
        x = args[0]
        if name == "isnum":
            return is_number(x)
        if name == "append":
            if x is None:
                raise Fault("null-dereference", "append to null", loc)
            if tag(x) != "list":
                raise Fault("type-error", f"append to {tag(x)}", loc)
            return x + (args[1],)
        if x is None:
            raise Fault("null-dereference", f"{name}(null)", loc)
        t = tag(x)
        if name == "len":
            if t not in ("list", "string"):
                raise Fault("type-error", f"len of {t}", loc)
            return len(x)
        if name == "int":
            if t == "int":
                return x
            if t == "float" and math.isfinite(x):
                return _check_int(int(x), loc)
            raise Fault("bad-cast", f"int({t})", loc)
        if name == "float":
            if t in ("int", "float"):
                return float(x)
            raise Fault("bad-cast", f"float({t})", loc)
        if name == "abs":
            if t == "int":
                return _check_int(abs(x), loc)
            if t == "float":
                return abs(x)
            raise Fault("type-error", f"abs of {t}", loc)
        if name == "str":
            return x if t == "string" else render_value(x)
        raise Fault("unknown-function", name, loc)
