"""Equivalence checks between the Bayesian scores and classical formulae.

Each check draws seed-fixed random instances and compares two rankings
exactly (max-rank ties included).  Used by ``bayesdebug derive`` and the
acceptance suite.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .bayes import AllImpossibleError, brute_force_posterior, is_impossible
from .patches import (
    ChangeSpectrum,
    PatchEvidence,
    PatchPrior,
    PatchQualityCounts,
    bapp_likelihood_model,
    combine_strategy,
    seapr_score,
)
from .sbfl import (
    CoverageMatrix,
    CoverageSpectrum,
    bayes_limit_log_score,
    bayesian_sbfl,
    compute_spectra,
    dump_coverage,
    formula_score,
    rank,
    sbfl_ranking,
)

CHECKS = ("naish01-equiv", "binary-limit", "wong2-seapr", "bapp-oracle")
SBFL_PS = (0.1, 0.5, 0.9)


@dataclass
class CheckResult:
    name: str
    trials: int = 0
    passed: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.trials > 0 and self.passed == self.trials

    def record(self, ok: bool, detail: str) -> None:
        self.trials += 1
        if ok:
            self.passed += 1
        elif len(self.counterexamples) < 3:
            self.counterexamples.append(detail)

    def summary(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.passed}/{self.trials}"


def random_matrix(rng: random.Random, max_tests: int = 12, max_elements: int = 25) -> CoverageMatrix:
    """A random coverage matrix with at least one failing test."""
    n_tests = rng.randint(1, max_tests)
    n_elements = rng.randint(1, max_elements)
    elements = tuple(f"L{i + 1}" for i in range(n_elements))
    tests = tuple(f"t{i + 1}" for i in range(n_tests))
    verdicts = {t: rng.choice(("pass", "fail")) for t in tests}
    verdicts[rng.choice(tests)] = "fail"
    density = rng.choice((0.2, 0.5, 0.8))
    counts = {t: {e: rng.randint(1, 3) for e in elements if rng.random() < density} for t in tests}
    return CoverageMatrix(elements, tests, verdicts, counts)


def check_naish01_equiv(trials: int = 200, seed: int = 0) -> CheckResult:
    """Closed-form Bayesian SBFL ranks exactly like Naish01 for every p."""
    rng = random.Random(seed)
    res = CheckResult("naish01-equiv")
    for _ in range(trials):
        m = random_matrix(rng)
        naish = sbfl_ranking(m, "naish01").rank_of
        bad = [p for p in SBFL_PS if bayesian_sbfl(m, p).rank_of != naish]
        res.record(not bad, f"p={bad}\n{dump_coverage(m)}")
    return res


def check_binary_limit(trials: int = 200, seed: int = 0) -> CheckResult:
    """The p -> 0 limit ranks exactly like Binary."""
    rng = random.Random(seed)
    res = CheckResult("binary-limit")
    for _ in range(trials):
        m = random_matrix(rng)
        spectra = compute_spectra(m)
        limit = rank({e: bayes_limit_log_score(s) for e, s in spectra.items()}).rank_of
        binary = sbfl_ranking(m, "binary").rank_of
        res.record(limit == binary, dump_coverage(m))
    return res


def check_wong2_seapr(trials: int = 200, seed: int = 0) -> CheckResult:
    """With gamma = 1 the unified-debugging score ranks like Wong2 (e_f - e_p)."""
    rng = random.Random(seed)
    res = CheckResult("wong2-seapr")
    for _ in range(trials):
        n = rng.randint(1, 10)
        counts = {f"L{i + 1}": PatchQualityCounts(rng.randint(0, 6), rng.randint(0, 6)) for i in range(n)}
        seapr = rank({loc: seapr_score(c, 1.0) for loc, c in counts.items()}).rank_of
        wong2 = rank(
            {
                loc: formula_score(CoverageSpectrum(c.p_plus, c.p_minus, 0, 0), "wong2")
                for loc, c in counts.items()
            }
        ).rank_of
        res.record(seapr == wong2, repr(counts))
    return res


def random_bapp_instance(rng: random.Random, max_locations=5, max_actions=4, max_tests=6) -> dict:
    """Patches with dyadic location priors, uniform action priors and change sets."""
    n_loc = rng.randint(1, max_locations)
    tests = [f"t{i + 1}" for i in range(rng.randint(1, max_tests))]
    verdicts = {t: rng.choice(("pass", "fail")) for t in tests}
    verdicts[rng.choice(tests)] = "fail"
    patches = []
    for i in range(n_loc):
        p_l = Fraction(1, 2 ** rng.randint(0, 4))
        n_a = rng.randint(1, max_actions)
        for j in range(n_a):
            changes = {t: rng.random() < (0.8 if verdicts[t] == "fail" else 0.4) for t in tests}
            patches.append((f"L{i + 1}a{j + 1}", f"L{i + 1}", p_l, Fraction(1, n_a), changes))
    return {"tests": tests, "verdicts": verdicts, "patches": patches, "alpha": rng.choice((1, 2, 3))}


def _spectrum(changes: dict, verdicts: dict) -> ChangeSpectrum:
    c_f = sum(changes[t] for t in verdicts if verdicts[t] == "fail")
    c_p = sum(changes[t] for t in verdicts if verdicts[t] == "pass")
    F = sum(v == "fail" for v in verdicts.values())
    P = len(verdicts) - F
    return ChangeSpectrum(c_f, c_p, F - c_f, P - c_p)


def bapp_vs_posterior(inst: dict) -> bool:
    """BAPP's multiply ordering equals the exact posterior ordering."""
    verdicts, alpha = inst["verdicts"], inst["alpha"]
    evidence = [
        PatchEvidence(pid, loc, _spectrum(ch, verdicts), PatchPrior(float(pl), float(pa)))
        for pid, loc, pl, pa, ch in inst["patches"]
    ]
    ordered = combine_strategy(evidence, alpha, "multiply")
    bapp = rank({e.id: s for e, s in ordered})
    p = 1 - Fraction(1, 2**alpha)
    changed = {pid: ch for pid, _, _, _, ch in inst["patches"]}
    observations = [
        (verdicts[t], lambda h, t=t: "changed" if changed[h][t] else "unchanged") for t in inst["tests"]
    ]
    prior = {pid: pl * pa for pid, _, pl, pa, _ in inst["patches"]}
    model = bapp_likelihood_model(p)
    try:
        post = brute_force_posterior(model, prior, observations)
    except AllImpossibleError:
        return all(is_impossible(s) for _, s in ordered)
    exact = rank({pid: post[pid] for pid in prior})
    return bapp.rank_of == exact.rank_of


def check_bapp_oracle(trials: int = 50, seed: int = 0) -> CheckResult:
    rng = random.Random(seed)
    res = CheckResult("bapp-oracle")
    for _ in range(trials):
        inst = random_bapp_instance(rng)
        res.record(bapp_vs_posterior(inst), repr(inst))
    return res


def run_check(name: str, trials: int, seed: int) -> CheckResult:
    fn = {
        "naish01-equiv": check_naish01_equiv,
        "binary-limit": check_binary_limit,
        "wong2-seapr": check_wong2_seapr,
        "bapp-oracle": check_bapp_oracle,
    }.get(name)
    if fn is None:
        raise ValueError(f"unknown check {name!r}; expected one of {CHECKS}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return fn(trials, seed)


__all__ = [
    "CHECKS",
    "CheckResult",
    "bapp_vs_posterior",
    "check_bapp_oracle",
    "check_binary_limit",
    "check_naish01_equiv",
    "check_wong2_seapr",
    "random_bapp_instance",
    "random_matrix",
    "run_check",
]
