import pytest
from hypothesis import given
from hypothesis import strategies as st

from bayesdebug.corpus import load_subject, subject_names
from bayesdebug.minilang import (
    Limits,
    ManifestError,
    MiniSyntaxError,
    Probe,
    ProbeSet,
    StaleEditError,
    TestCase,
    apply_edit,
    coverage_matrix,
    parse,
    parse_expr,
    parse_manifest,
    render_expr,
    render_program,
    run_suite,
    run_test,
)
from bayesdebug.minilang import ast as A
from bayesdebug.minilang.interp import Marker
from bayesdebug.minilang.testing import dump_manifest


def run(src, call, limits=None):
    return run_test(parse(src), TestCase.from_text("t", call), limits=limits)


def stmt_at(program, line):
    return next(s for s in program.statements() if s.loc.line == line)


def test_parse_single_function():
    p = parse("fn f(a){ return a + 1; }")
    assert [f.name for f in p.all_functions()] == ["f"]


def test_unbalanced_brace_reports_line():
    with pytest.raises(MiniSyntaxError) as err:
        parse("fn f(a) {\n  return a;\n\n")
    assert err.value.line == 1  # the unclosed brace


def test_or_is_a_logical_node():
    e = parse_expr("a || b")
    assert isinstance(e, A.Logical) and e.op == "||"


def test_assertion_passes():
    p = parse("fn f(a){return a+1;}")
    t = TestCase.from_text("t1", "f(2)", [["result", "3"]])
    assert run_test(p, t).passed


def test_assertion_failure_reported():
    p = parse("fn f(a){return a+2;}")
    r = run_test(p, TestCase.from_text("t1", "f(2)", [["result", "3"]]))
    assert r.verdict == "fail" and "expected 3 got 4" in r.fault


@pytest.mark.parametrize(
    "expr, value",
    [
        ("7 / 2", 3),
        ("-7 / 2", -3),
        ("-7 % 2", -1),
        ("7.0 / 2", 3.5),
        ("\"ab\" + \"c\"", "abc"),
        ("[1] + [2, 3]", (1, 2, 3)),
        ("len(\"abc\")", 3),
        ("1 == 1.0", True),
        ("null == null", True),
        ("\"a\" < \"b\"", True),
    ],
)
def test_expression_semantics(expr, value):
    r = run(f"fn f() {{ return {expr}; }}", "f()")
    assert r.passed and r.result == value


@pytest.mark.parametrize(
    "body, kind",
    [
        ("return 1 / 0;", "division-by-zero"),
        ("return null + 1;", "null-dereference"),
        ("return [1][3];", "index-out-of-bounds"),
        ("return \"a\" - 1;", "type-error"),
        ("return g();", "unknown-function"),
        ("return 9223372036854775807 + 1;", "overflow"),
    ],
)
def test_faults(body, kind):
    r = run(f"fn f() {{ {body} }}", "f()")
    assert r.verdict == "fail" and r.fault.startswith(kind)


def test_step_limit():
    r = run("fn f() { while (true) { } return 1; }", "f()", Limits(max_steps=1000))
    assert r.fault.startswith("step-limit")


def test_stack_limit():
    r = run("fn f(n) { return f(n + 1); }", "f(0)", Limits(max_depth=20))
    assert r.fault.startswith("stack-overflow")


def test_overloads_by_arity():
    src = "fn g(a) { return g(a, 10); }\nfn g(a, b) { return a + b; }"
    assert run(src, "g(1)").result == 11


SHORT_CIRCUIT = [
    # (expression, expected result or fault prefix)
    ("false && 1 / 0 == 1", False),
    ("true || 1 / 0 == 1", True),
    ("false || true", True),
    ("true && false", False),
    ("true && 1 / 0 == 1", "division-by-zero"),
    ("false || 1 / 0 == 1", "division-by-zero"),
    ("x != null && len(x) > 0", False),
    ("x == null || len(x) > 0", True),
    ("!(x != null) || len(x) > 0", True),
    ("(false && 1 / 0 == 1) || true", True),
    ("true && (false || true)", True),
    ("1 && true", "type-error"),
    ("null || true", "null-dereference"),
]


@pytest.mark.parametrize("expr, want", SHORT_CIRCUIT)
def test_short_circuit(expr, want):
    assert short_circuit_ok(expr, want)


PROBE_SRC = """\
fn g(v) { return v + 1; }
fn f(x) {
    let y = 0;
    return y;
}
"""


PROBE_CASES = [
    ("x != null && len(x) > 0", False),
    ("x == null || len(x) > 0", True),
    ("x != null && g(1) > 0", False),
    ("x == null && g(1) > 0", Marker("fault:user-call")),
    ("len(x) > 0", Marker("fault:null-dereference")),
    ("true || 1 / 0 == 0", True),
    ("false || 1 / 0 == 0", Marker("fault:division-by-zero")),
]


def short_circuit_ok(expr, want) -> bool:
    r = run(f"fn f(x) {{ return {expr}; }}", "f(null)")
    if isinstance(want, str):
        return r.verdict == "fail" and r.fault.startswith(want)
    return r.passed and r.result is want


def probe_time_ok(probe_expr, want) -> bool:
    p = parse(PROBE_SRC)
    probes = ProbeSet()
    probes.add(stmt_at(p, 3).nid, Probe("p1", "replace", parse_expr("y"), parse_expr(probe_expr)))
    r = run_test(p, TestCase.from_text("t", "f(null)"), probes)
    return r.passed and [e.new_value for e in r.events] == [want]


@pytest.mark.parametrize("probe_expr, want", PROBE_CASES)
def test_short_circuit_at_probe_time(probe_expr, want):
    assert probe_time_ok(probe_expr, want)


def test_user_call_probe_leaves_verdict_alone():
    p = parse(PROBE_SRC)
    probes = ProbeSet()
    probes.add(stmt_at(p, 4).nid, Probe("p1", "replace", parse_expr("y"), parse_expr("y == 0 && g(y) > 0")))
    t = TestCase.from_text("t", "f(1)", [["result", "0"]])
    probed = run_test(p, t, probes)
    plain = run_test(p, t)
    assert probed.verdict == plain.verdict == "pass"
    assert probed.events[0].new_value == Marker("fault:user-call")
    assert probed.steps == plain.steps


LOOP_SRC = """\
fn f(n) {
    let i = 0;
    let s = 0;
    while (i < n) {
        s = s + i;
        i = i + 1;
    }
    return s;
}
"""


def test_hit_window_keeps_last_hits():
    p = parse(LOOP_SRC)
    body = stmt_at(p, 5)
    probes = ProbeSet()
    probes.add(body.nid, Probe("p1", "replace", parse_expr("i"), parse_expr("i + 1")))
    r = run_test(p, TestCase.from_text("t", "f(250)"), probes, Limits(hit_limit=100))
    assert [e.hit_index for e in r.events] == list(range(151, 251))
    assert [e.old_value for e in r.events] == list(range(150, 250))


def test_short_loops_trace_every_hit():
    p = parse(LOOP_SRC)
    probes = ProbeSet()
    probes.add(stmt_at(p, 5).nid, Probe("p1", "replace", parse_expr("i"), parse_expr("i")))
    r = run_test(p, TestCase.from_text("t", "f(40)"), probes, Limits(hit_limit=100))
    assert [e.hit_index for e in r.events] == list(range(1, 41))


def test_line_coverage_counts():
    p = parse(LOOP_SRC)
    r = run_test(p, TestCase.from_text("t", "f(10)"))
    assert r.line_counts["main.mini:2"] == 1
    assert r.line_counts["main.mini:5"] == 10
    assert r.line_counts["main.mini:4"] == 11


def test_coverage_is_deterministic():
    subject = load_subject("stats")
    tests = subject.tests[:3]
    first = run_suite(subject.program, tests)
    second = run_suite(subject.program, tests)
    assert {k: v.line_counts for k, v in first.runs.items()} == {k: v.line_counts for k, v in second.runs.items()}


def test_coverage_matrix_requires_a_failing_test():
    p = parse("fn f() { return 1; }")
    t = TestCase.from_text("t1", "f()", [["result", "2"]])
    m = coverage_matrix(p, [t])
    assert m.failing == ["t1"]


@pytest.mark.parametrize("name", subject_names())
def test_subjects_round_trip(name):
    subject = load_subject(name)
    assert parse(render_program(subject.program)[f"{name}.mini"], f"{name}.mini") == subject.program


@given(st.recursive(
    st.one_of(st.integers(-50, 50).map(str), st.sampled_from(["x", "y", "true", "null", "\"s\"", "1.5"])),
    lambda inner: st.one_of(
        st.tuples(inner, st.sampled_from(["+", "-", "*", "<", "==", "&&", "||"]), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        inner.map(lambda e: f"!({e})"),
        st.tuples(inner, inner).map(lambda t: f"f({t[0]}, {t[1]})"),
        inner.map(lambda e: f"[{e}][0]"),
    ),
    max_leaves=8,
))
def test_expression_render_round_trip(text):
    e = parse_expr(text)
    assert parse_expr(render_expr(e)) == e


def test_parameter_replacement_changes_only_the_call_site():
    subject = load_subject("clock")
    p = subject.program
    call = next(
        n for s in p.statements() for e in A.line_exprs(s) for n in A.walk(e)
        if isinstance(n, A.Call) and n.func == "make_time" and len(n.args) == 3
    )
    arg = call.args[2]
    edit = {"op": "replace_expr", "node": arg.nid, "old": "DEFAULT_ZONE", "new": "h"}
    before = render_program(p)["clock.mini"].splitlines()
    after = render_program(apply_edit(p, edit))["clock.mini"].splitlines()
    diff = [(a, b) for a, b in zip(before, after) if a != b]
    assert diff == [("    return make_time(h, m, DEFAULT_ZONE);", "    return make_time(h, m, h);")]
    assert render_program(p)["clock.mini"].splitlines() == before


def test_identity_edit_keeps_program():
    p = parse(LOOP_SRC)
    s = stmt_at(p, 5)
    edit = {"op": "replace_expr", "node": s.value.nid, "old": "s + i", "new": "s + i"}
    assert apply_edit(p, edit) == p


def test_guard_insertion_adds_one_statement():
    p = parse(LOOP_SRC)
    s = stmt_at(p, 8)
    edit = {"op": "insert_before", "node": s.nid, "old": "return s;", "new": "if (s == null) { return; }"}
    q = apply_edit(p, edit)
    assert len(list(q.statements())) == len(list(p.statements())) + 2  # the if and its return
    assert sum(isinstance(x, A.If) for x in q.statements()) == 1


def test_stale_edit_rejected():
    p = parse(LOOP_SRC)
    s = stmt_at(p, 5)
    with pytest.raises(StaleEditError):
        apply_edit(p, {"op": "replace_expr", "node": s.value.nid, "old": "s - i", "new": "s"})


def test_manifest_round_trip_and_errors():
    tests = [TestCase.from_text("t1", "f(1, \"a\")", [["result", "2"]]), TestCase.from_text("t2", "f(0)", label="fail")]
    again = parse_manifest(dump_manifest(tests))
    assert [t.id for t in again] == ["t1", "t2"] and again[1].label == "fail"
    with pytest.raises(ManifestError):
        TestCase.from_text("t", "f(x)")
    with pytest.raises(ManifestError):
        parse_manifest("{not json}\n")
