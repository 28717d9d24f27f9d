"""Test cases, the test manifest format, and coverage collection.

A manifest holds one JSON object per line (``#`` comments allowed)::

    {"id": "t1", "call": "f(2)", "assert": [["result", "3"]], "label": "pass"}

``call`` is an entry call with constant arguments.  Each assertion pairs an
expression (``result`` is bound to the call's value) with an expected
constant; they are compared with the language's ``==``.  ``label`` is the
expected verdict on the program under test, kept for corpus bookkeeping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..sbfl import CoverageMatrix
from . import ast as A
from .interp import Env, Fault, Interpreter, Limits, ProbeSet, lang_eq
from .lexer import MiniSyntaxError
from .parser import parse_expr
from .values import render_value


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    id: str
    call: A.Call
    assertions: tuple = ()  # (expr, expected-expr) pairs
    label: str = "pass"
    source: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_text(cls, id: str, call: str, assertions: Sequence = (), label: str = "pass"):
        where = f"test {id!r}"
        try:
            call_expr = parse_expr(call, file=where)
        except MiniSyntaxError as e:
            raise ManifestError(f"{where}: bad entry call: {e}") from None
        if not isinstance(call_expr, A.Call):
            raise ManifestError(f"{where}: entry must be a function call, got {call!r}")
        for arg in call_expr.args:
            if any(isinstance(n, (A.Name, A.Call)) for n in A.walk(arg)):
                raise ManifestError(f"{where}: entry arguments must be constants")
        pairs = []
        for item in assertions:
            if len(item) != 2:
                raise ManifestError(f"{where}: assertion must be [expr, expected]")
            expr, expected = item
            try:
                pairs.append((parse_expr(expr, file=where), parse_expr(expected, file=where)))
            except MiniSyntaxError as e:
                raise ManifestError(f"{where}: bad assertion: {e}") from None
        if label not in ("pass", "fail"):
            raise ManifestError(f"{where}: label must be 'pass' or 'fail'")
        src = {"id": id, "call": call, "assert": [list(a) for a in assertions], "label": label}
        return cls(id, call_expr, tuple(pairs), label, src)

    def with_label(self, label: str) -> "TestCase":
        src = dict(self.source, label=label)
        return TestCase(self.id, self.call, self.assertions, label, src)

    def to_json(self) -> str:
        return json.dumps(self.source)


def parse_manifest(text: str, source: str = "<manifest>") -> list:
    tests, seen = [], set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ManifestError(f"{source}:{lineno}: invalid JSON: {e.msg}") from None
        try:
            t = TestCase.from_text(
                obj["id"], obj["call"], obj.get("assert", []), obj.get("label", "pass")
            )
        except KeyError as e:
            raise ManifestError(f"{source}:{lineno}: missing field {e}") from None
        except ManifestError as e:
            raise ManifestError(f"{source}:{lineno}: {e}") from None
        if t.id in seen:
            raise ManifestError(f"{source}:{lineno}: duplicate test id {t.id!r}")
        seen.add(t.id)
        tests.append(t)
    return tests


def load_manifest(path) -> list:
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), str(path))


def dump_manifest(tests: Iterable[TestCase]) -> str:
    return "".join(t.to_json() + "\n" for t in tests)


def check_entry_points(program: A.Program, tests: Iterable[TestCase]) -> None:
    for t in tests:
        if program.lookup(t.call.func, len(t.call.args)) is None:
            raise ManifestError(
                f"test {t.id!r}: no function {t.call.func}/{len(t.call.args)} in program"
            )


@dataclass
class TestRun:
    __test__ = False

    test_id: str
    verdict: str
    fault: str | None
    line_counts: dict
    stmt_counts: dict
    events: list
    steps: int
    result: object = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _execute(program, test, limits, probes) -> TestRun:
    interp = Interpreter(program, limits, probes, test.id)
    fault = None
    result = None
    try:
        interp.init_globals()
        args = [interp.eval(a, Env()) for a in test.call.args]
        result = interp.call(test.call.func, args, test.call.loc)
        env = Env(interp.globals)
        env.vars["result"] = result
        for expr, expected in test.assertions:
            got = interp.eval(expr, env)
            want = interp.eval(expected, Env())
            if not lang_eq(got, want):
                fault = "assertion: expected {} got {}".format(_show(want), _show(got))
                break
    except Fault as f:
        fault = f.describe()
    except RecursionError:
        fault = "stack-overflow: host recursion limit"
    return TestRun(
        test.id,
        "pass" if fault is None else "fail",
        fault,
        dict(interp.line_counts),
        dict(interp.stmt_counts),
        interp.events,
        interp.steps,
        result,
    )


def _show(v) -> str:
    return render_value(v)


def run_test(
    program: A.Program,
    test: TestCase,
    probes: ProbeSet | None = None,
    limits: Limits | None = None,
    stmt_counts: dict | None = None,
) -> TestRun:
    """Run one test; with probes, record values for the last ``hit_limit`` hits.

    The hit window needs the number of times each probed statement executes.
    Pass ``stmt_counts`` from an earlier unprobed run to skip the counting pass.
    """
    limits = limits or Limits()
    if not probes:
        return _execute(program, test, limits, None)
    if stmt_counts is None:
        stmt_counts = _execute(program, test, limits, None).stmt_counts
    window = {
        nid: max(1, stmt_counts.get(nid, 0) - limits.hit_limit + 1) for nid in probes.probes
    }
    return _execute(program, test, limits, ProbeSet(probes.probes, window))


@dataclass
class SuiteRun:
    """Verdicts and coverage of a whole test suite on one program."""

    program: A.Program
    tests: list
    runs: dict

    @property
    def verdicts(self) -> dict:
        return {t.id: self.runs[t.id].verdict for t in self.tests}

    @property
    def failing(self) -> list:
        return [t for t in self.tests if not self.runs[t.id].passed]

    @property
    def passing(self) -> list:
        return [t for t in self.tests if self.runs[t.id].passed]

    def matrix(self) -> CoverageMatrix:
        """Line coverage matrix; requires at least one failing test."""
        return CoverageMatrix(
            tuple(self.program.locations()),
            tuple(t.id for t in self.tests),
            self.verdicts,
            {t.id: dict(self.runs[t.id].line_counts) for t in self.tests},
        )


def run_suite(program: A.Program, tests: Sequence[TestCase], limits: Limits | None = None) -> SuiteRun:
    return SuiteRun(program, list(tests), {t.id: run_test(program, t, limits=limits) for t in tests})


def coverage_matrix(program: A.Program, tests: Sequence[TestCase], limits: Limits | None = None) -> CoverageMatrix:
    return run_suite(program, tests, limits).matrix()
