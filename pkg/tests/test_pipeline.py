import json
from dataclasses import replace
from importlib import resources

import jsonschema
import pytest

from bayesdebug.minilang.testing import TestCase
from bayesdebug.pipeline import (
    Project,
    ProjectError,
    RepairConfig,
    Validator,
    analyze,
    compare,
    plausible_by_suite,
    run_baseline,
    run_repair,
)

SIGN = """\
fn sign(a, b) {
    let p = a * b;
    if (p >= 0) {
        return 1;
    }
    return -1;
}
"""


def tc(id, call, expected, label="pass"):
    return TestCase.from_text(id, call, [["result", expected]], label)


@pytest.fixture
def sign_project():
    tests = [
        tc("t1", "sign(0, 5)", "-1", "fail"),
        tc("t2", "sign(2, 3)", "1"),
        tc("t3", "sign(-2, 3)", "-1"),
        tc("t4", "sign(-2, -3)", "1"),
    ]
    return Project("sign", {"main.mini": SIGN}, tests)


@pytest.fixture(scope="module")
def schema():
    text = (resources.files("bayesdebug") / "schemas" / "report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def test_save_load_round_trip(sign_project, tmp_path):
    sign_project.save(tmp_path / "sign")
    loaded = Project.load(tmp_path / "sign")
    assert loaded.files == sign_project.files
    assert loaded.tests == sign_project.tests
    assert loaded.truth is None


def test_load_errors(tmp_path):
    with pytest.raises(ProjectError):
        Project.load(tmp_path / "missing")
    (tmp_path / "p" / "src").mkdir(parents=True)
    with pytest.raises(ProjectError):
        Project.load(tmp_path / "p")


def test_no_failing_test_is_an_error(sign_project):
    ok = replace(sign_project, tests=sign_project.tests[1:])
    with pytest.raises(ProjectError):
        analyze(ok)


def test_repair_finds_operator_fix(sign_project, schema):
    report = compare(sign_project)
    base, bapp = report.results
    assert base.strategy == "baseline" and bapp.strategy == "multiply"
    assert bapp.first_plausible_rank is not None
    assert bapp.first_plausible_rank <= base.first_plausible_rank
    validator = Validator(analyze(sign_project), RepairConfig().limits)
    by_id = {c.id: c for c in validator.analysis.candidates}
    assert plausible_by_suite(validator, by_id[bapp.first_plausible_id])
    jsonschema.validate(report.to_dict(), schema)


def test_no_candidates_report(schema):
    src = "fn f() {\n    let x = 0;\n    x = 1;\n    return x;\n}\n"
    project = Project("flat", {"main.mini": src}, [tc("t1", "f()", "0", "fail")])
    report = run_repair(project)
    assert report.note == "no candidates"
    assert report.results[0].first_plausible_rank is None
    jsonschema.validate(report.to_dict(), schema)


def test_baseline_ignores_alpha_and_budget(sign_project):
    a = run_baseline(sign_project, RepairConfig(alpha=0.3, hit_limit=1, step_budget=10)).to_json()
    b = run_baseline(sign_project, RepairConfig(alpha=10, hit_limit=500)).to_json()
    assert a == b


def test_strategies_share_candidates(sign_project):
    analysis = analyze(sign_project)
    validator = Validator(analysis, RepairConfig().limits)
    ids = {c.id for c in analysis.candidates}
    for mode in ("multiply", "fl-first", "dyn-first"):
        report = run_repair(sign_project, RepairConfig(mode=mode), analysis, validator)
        r = report.results[0]
        assert {pid for pid, _ in r.order} <= ids
        assert r.budget["survivors"] + r.budget["discarded"] == len(ids)


def test_validator_agrees_with_full_suite(corpus):
    project = corpus[0]
    analysis = analyze(project)
    validator = Validator(analysis, RepairConfig().limits)
    for cand in analysis.candidates[:40]:
        assert validator.validate(cand).plausible == plausible_by_suite(validator, cand)


def test_parallel_validation_is_deterministic(corpus):
    project = corpus[1]
    serial = run_repair(project, RepairConfig(jobs=1)).to_json()
    parallel = run_repair(project, RepairConfig(jobs=4)).to_json()
    a, b = json.loads(serial), json.loads(parallel)
    for r in (a, b):
        for res in r["results"]:
            res.pop("validations")  # chunked validation may look further ahead
    assert a == b


def test_corpus_report_matches_schema(corpus, schema):
    report = compare(corpus[2], RepairConfig(audit=True))
    jsonschema.validate(report.to_dict(), schema)
    assert report.results[0].correct is not None


def test_config_validation():
    with pytest.raises(ValueError):
        RepairConfig(mode="random")
    with pytest.raises(ValueError):
        RepairConfig(alpha=0)
    with pytest.raises(ValueError):
        RepairConfig(jobs=0)
