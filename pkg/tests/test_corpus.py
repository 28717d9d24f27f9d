import pytest

from bayesdebug.corpus import CorpusKnobs, generate_corpus, load_subject, subject_names
from bayesdebug.minilang import apply_edit
from bayesdebug.minilang.testing import run_suite, run_test
from bayesdebug.pipeline import RepairConfig, analyze
from bayesdebug.tracer import build_probes


def test_subjects_pass_their_own_suites():
    assert len(subject_names()) == 8
    for name in subject_names():
        s = load_subject(name)
        assert len(s.tests) >= 30
        assert all(r.passed for r in run_suite(s.program, s.tests).runs.values())


def test_same_seed_same_corpus(corpus):
    again = generate_corpus(1, 5)
    assert [(b.name, b.files, b.tests) for b in again] == [(b.name, b.files, b.tests) for b in corpus[:5]]


def test_different_seed_differs():
    assert [b.files for b in generate_corpus(2, 5)] != [b.files for b in generate_corpus(1, 5)]


def test_knobs_restrict_templates():
    bugs = generate_corpus(3, 4, CorpusKnobs(templates=("ConditionalReplacer",)))
    assert {b.truth.template for b in bugs} == {"ConditionalReplacer"}


def test_every_bug_is_well_formed(corpus):
    assert len(corpus) == 30
    assert len({b.name for b in corpus}) == 30
    for bug in corpus:
        suite = run_suite(bug.program, bug.tests)
        assert suite.failing
        assert {t.id: t.label for t in bug.tests} == suite.verdicts
        fixed = bug.truth.fixed_program()
        assert all(r.passed for r in run_suite(fixed, bug.tests).runs.values())


def test_inverse_edit_is_generated(corpus):
    for bug in corpus:
        analysis = analyze(bug)
        fixes = [c for c in analysis.candidates if c.edit == bug.truth.fix]
        assert fixes and fixes[0].location in bug.truth.locations
        assert apply_edit(analysis.program, fixes[0].edit) == bug.truth.fixed_program()


def test_probes_are_transparent_on_corpus(corpus):
    """Verdicts and coverage are identical with every candidate probed."""
    config = RepairConfig()
    for bug in corpus:
        analysis = analyze(bug, config)
        probes = build_probes(analysis.program, analysis.candidates)
        for t in bug.tests:
            plain = analysis.base_runs[t.id]
            probed = run_test(analysis.program, t, probes, config.limits, stmt_counts=plain.stmt_counts)
            assert (probed.verdict, probed.fault, probed.line_counts) == (plain.verdict, plain.fault, plain.line_counts)


def test_count_must_be_positive():
    with pytest.raises(ValueError):
        generate_corpus(1, 0)
