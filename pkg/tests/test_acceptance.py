"""One test per acceptance criterion; each records a PASS/FAIL line.

The lines are printed in the ``acceptance criteria`` section at the end of
the pytest run.  Run just this file with ``pytest tests/test_acceptance.py``.
"""

import itertools
import math
import random
from fractions import Fraction

import pytest
from test_bayes import random_model
from test_minilang import LOOP_SRC, PROBE_CASES, SHORT_CIRCUIT, probe_time_ok, short_circuit_ok, stmt_at

from bayesdebug.bayes import AllImpossibleError, LogPosterior, batch_update, brute_force_posterior, is_impossible, normalize
from bayesdebug.checks import check_bapp_oracle, check_binary_limit, check_naish01_equiv, check_wong2_seapr
from bayesdebug.cli import main
from bayesdebug.minilang import parse, parse_expr
from bayesdebug.minilang.interp import Limits, Probe, ProbeSet
from bayesdebug.minilang.testing import TestCase, run_test
from bayesdebug.patches import (
    MODES,
    ChangeSpectrum,
    PatchEvidence,
    PatchPrior,
    PatchQualityCounts,
    SeAprParams,
    combine_strategy,
    seapr_evidence,
    seapr_likelihood_model,
    seapr_score,
)
from bayesdebug.pipeline import RepairConfig, analyze, bapp_order, trace_project
from bayesdebug.tracer import build_probes

TRIALS = 200
SEED = 7


def test_c01_naish01_equivalence(criterion):
    res = check_naish01_equiv(TRIALS, SEED)
    criterion(1, res.ok, f"naish01-equiv {res.passed}/{res.trials} matrices, p in (0.1, 0.5, 0.9)")
    assert res.ok, res.counterexamples


def test_c02_binary_limit(criterion):
    res = check_binary_limit(TRIALS, SEED)
    criterion(2, res.ok, f"binary-limit {res.passed}/{res.trials} matrices")
    assert res.ok, res.counterexamples


def test_c03_bayes_oracles(criterion):
    rng = random.Random(SEED)
    models, worst = 0, 0.0
    while models < 100:
        model, prior, evidence = random_model(rng)
        try:
            oracle = brute_force_posterior(model, prior, evidence)
        except AllImpossibleError:
            continue
        got = normalize(batch_update(LogPosterior.from_probabilities(prior), model, evidence))
        worst = max(worst, max(abs(got[h] - float(oracle[h])) for h in prior))
        models += 1
    bapp = check_bapp_oracle(60, SEED)
    ok = worst <= 1e-9 and bapp.ok
    criterion(3, ok, f"{models} models max err {worst:.1e}; BAPP vs posterior {bapp.passed}/{bapp.trials}")
    assert ok


def _sign(x):
    return (x > 0) - (x < 0)


def test_c04_seapr(criterion):
    params = SeAprParams(0.5, 0.25)
    gamma = math.log((1 - 0.25) / (1 - 0.5)) / math.log(0.5 / 0.25)
    direct = 3 - gamma * 2
    closed_ok = abs(params.gamma - gamma) <= 1e-12 and abs(seapr_score(PatchQualityCounts(3, 2), params) - direct) <= 1e-12
    rng = random.Random(SEED)
    instances, agree = 60, 0
    for _ in range(instances):
        p1, p2 = Fraction(rng.randint(5, 9), 10), Fraction(rng.randint(1, 4), 10)
        sp = SeAprParams(float(p1), float(p2))
        counts = {f"L{i}": PatchQualityCounts(rng.randint(0, 3), rng.randint(0, 3)) for i in range(4)}
        post = brute_force_posterior(seapr_likelihood_model(p1, p2), {k: Fraction(1, 4) for k in counts}, seapr_evidence(counts))
        score = {k: seapr_score(c, sp) for k, c in counts.items()}
        agree += all(
            abs(score[a] - score[b]) <= 1e-12 if post[a] == post[b] else _sign(post[a] - post[b]) == _sign(score[a] - score[b])
            for a, b in itertools.combinations(counts, 2)
        )
    wong = check_wong2_seapr(TRIALS, SEED)
    ok = closed_ok and agree == instances and wong.ok
    criterion(4, ok, f"gamma={params.gamma:.6f}; posterior order {agree}/{instances}; wong2 {wong.passed}/{wong.trials}")
    assert ok


def _filter_ok(ordered, F):
    flags = [e.spectrum.c_f < F for e, _ in ordered]
    return flags == sorted(flags) and all(is_impossible(s) == (e.spectrum.c_f < F) for e, s in ordered)


def test_c05_hard_filter(criterion, corpus):
    rng = random.Random(SEED)
    synthetic = 0
    for _ in range(300):
        F = rng.randint(1, 4)
        patches = [
            PatchEvidence(
                f"p{i}", f"L{rng.randint(1, 4)}",
                ChangeSpectrum(c_f := rng.randint(0, F), rng.randint(0, 5), F - c_f, 0),
                PatchPrior(rng.uniform(0.01, 1), 1 / rng.randint(1, 6)),
            )
            for i in range(rng.randint(1, 10))
        ]
        for mode in MODES:
            for alpha in (0.3, 1.0, 3.0, 10.0):
                synthetic += _filter_ok(combine_strategy(patches, alpha, mode), F)
    real = 0
    for bug in corpus:
        analysis = analyze(bug)
        state = trace_project(analysis, RepairConfig())
        F = len(state.failing_traced)
        spectra = state.spectra
        for mode in MODES:
            order = bapp_order(analysis, state, RepairConfig(mode=mode))
            flags = [spectra[c.id].c_f < F for c, _ in order]
            real += flags == sorted(flags) and all(is_impossible(s) == f for (_, s), f in zip(order, flags))
    total = 300 * len(MODES) * 4
    ok = synthetic == total and real == len(corpus) * len(MODES)
    criterion(5, ok, f"synthetic {synthetic}/{total} orderings; corpus {real}/{len(corpus) * len(MODES)} orderings")
    assert ok


def test_c06_filter_soundness(criterion, experiment):
    audit = experiment.to_dict()["summary"]["audit"]
    ok = audit["discarded_plausible"] == 0 and audit["discarded"] > 0
    criterion(6, ok, f"{audit['discarded']} discarded candidates validated, {audit['discarded_plausible']} plausible")
    assert ok


def test_c07_end_to_end(criterion, experiment):
    main_run = experiment.main
    ok = main_run["median_ratio"] <= 0.75 and main_run["wins"] >= 0.6
    criterion(
        7, ok, f"median ratio {main_run['median_ratio']:.3f} (<= 0.75), wins {main_run['wins']:.3f} (>= 0.60)"
    )
    assert ok


def test_c08_fl_improvement(criterion, experiment):
    fl = experiment.fl_summary(experiment.config.main_alpha)
    acc5 = fl["acc"]["5"]
    ok = acc5["marginal"] >= acc5["ochiai"] and fl["gt_rank_ratio_median"] <= 1.0
    criterion(
        8, ok, f"acc@5 marginal {acc5['marginal']} vs ochiai {acc5['ochiai']}; gt-rank ratio median {fl['gt_rank_ratio_median']:.3f}"
    )
    assert ok


def test_c09_strategy_ablation(criterion, experiment):
    alpha = experiment.config.main_alpha
    med = {m: experiment.summary(m, alpha)["median_ratio"] for m in MODES}
    ok = med["multiply"] <= med["dyn-first"] and med["multiply"] <= med["fl-first"]
    criterion(9, ok, "median ratio " + ", ".join(f"{m} {v:.3f}" for m, v in med.items()))
    assert ok


def test_c10_interpreter_semantics(criterion, corpus, tmp_path, capsys):
    battery = sum(short_circuit_ok(e, w) for e, w in SHORT_CIRCUIT) + sum(probe_time_ok(e, w) for e, w in PROBE_CASES)
    cases = len(SHORT_CIRCUIT) + len(PROBE_CASES)
    transparent, runs = 0, 0
    for bug in corpus:
        analysis = analyze(bug)
        probes = build_probes(analysis.program, analysis.candidates)
        limits = RepairConfig().limits
        for t in bug.tests:
            plain = analysis.base_runs[t.id]
            probed = run_test(analysis.program, t, probes, limits, stmt_counts=plain.stmt_counts)
            transparent += (probed.verdict, probed.line_counts) == (plain.verdict, plain.line_counts)
            runs += 1
    outputs = []
    for name in ("a", "b"):
        code = main(["bench", "--seed", "1", "--count", "30", "--out-dir", str(tmp_path / name), "-o", str(tmp_path / f"{name}.json")])
        assert code == 0
        outputs.append(
            [(tmp_path / f"{name}.json").read_bytes()]
            + [p.read_bytes() for p in sorted((tmp_path / name).rglob("*")) if p.is_file()]
        )
    capsys.readouterr()
    identical = outputs[0] == outputs[1]
    ok = battery == cases and transparent == runs and identical
    criterion(
        10, ok, f"short-circuit {battery}/{cases}; transparency {transparent}/{runs} runs; bench byte-identical {identical}"
    )
    assert ok


def test_c11_hit_window(criterion):
    p = parse(LOOP_SRC)
    probes = ProbeSet()
    probes.add(stmt_at(p, 5).nid, Probe("p1", "replace", parse_expr("i"), parse_expr("i + 1")))
    r = run_test(p, TestCase.from_text("t", "f(250)"), probes, Limits(hit_limit=100))
    hits = [e.hit_index for e in r.events]
    ok = hits == list(range(151, 251))
    criterion(11, ok, f"hits {hits[0]}..{hits[-1]} ({len(hits)} traced) with limit 100")
    assert ok
