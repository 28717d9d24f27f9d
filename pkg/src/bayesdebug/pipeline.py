"""End-to-end repair: SBFL, generation, tracing, ranking and validation.

A project directory holds ``src/*.mini``, a JSON-lines ``tests/manifest``
and, for seeded bugs, a ``truth.json``.  Every strategy shares the same
analysis (coverage, Ochiai ranking, candidate list, priors) and the same
memoized validator, so candidate sets and plausibility verdicts agree
across strategies by construction.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .bayes import is_impossible
from .minilang import ast as A
from .minilang.edits import apply_edit
from .minilang.interp import Limits
from .minilang.parser import parse_program
from .minilang.testing import check_entry_points, dump_manifest, load_manifest, run_suite, run_test
from .patches import (
    MODES,
    PatchCandidate,
    PatchEvidence,
    PatchPrior,
    combine_strategy,
    gv_plausible,
    location_prior,
    marginal_fl,
    bapp_score,
    uniform_action_prior,
    unranked_locations,
)
from .sbfl import ScoredRanking, acc_at_k, best_rank, sbfl_ranking
from .templates import TemplateConfig, generate_at, select_locations
from .tracer import TraceBudget, TraceState, location_scorer, trace

ACC_KS = (1, 3, 5, 10)


class ProjectError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruth:
    """Where a seeded bug lives and the edit that undoes it."""

    locations: tuple
    template: str
    fix: dict
    fixed_sources: dict
    seed_edit: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "locations": list(self.locations),
                "template": self.template,
                "fix": self.fix,
                "fixed_sources": self.fixed_sources,
                "seed_edit": self.seed_edit,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        d = json.loads(text)
        return cls(tuple(d["locations"]), d["template"], d["fix"], d["fixed_sources"], d.get("seed_edit", {}))

    def fixed_program(self) -> A.Program:
        return parse_program(self.fixed_sources)


@dataclass
class Project:
    name: str
    files: dict
    tests: list
    truth: GroundTruth | None = None
    _program: A.Program | None = field(default=None, repr=False, compare=False)

    @property
    def program(self) -> A.Program:
        if self._program is None:
            self._program = parse_program(self.files)
        return self._program

    @classmethod
    def load(cls, path) -> "Project":
        root = Path(path)
        if not root.is_dir():
            raise ProjectError(f"{root}: not a project directory")
        files = {p.name: p.read_text(encoding="utf-8") for p in sorted((root / "src").glob("*.mini"))}
        if not files:
            raise ProjectError(f"{root}: no src/*.mini files")
        manifest = root / "tests" / "manifest"
        if not manifest.is_file():
            raise ProjectError(f"{root}: missing tests/manifest")
        tests = load_manifest(manifest)
        truth_path = root / "truth.json"
        truth = GroundTruth.from_json(truth_path.read_text(encoding="utf-8")) if truth_path.is_file() else None
        project = cls(root.name, files, tests, truth)
        check_entry_points(project.program, tests)
        return project

    def save(self, path) -> Path:
        root = Path(path)
        (root / "src").mkdir(parents=True, exist_ok=True)
        (root / "tests").mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (root / "src" / name).write_text(text, encoding="utf-8")
        (root / "tests" / "manifest").write_text(dump_manifest(self.tests), encoding="utf-8")
        if self.truth is not None:
            (root / "truth.json").write_text(self.truth.to_json() + "\n", encoding="utf-8")
        return root


@dataclass(frozen=True)
class RepairConfig:
    alpha: float = 3.0
    mode: str = "multiply"
    top_locations: int = 200
    hit_limit: int = 100
    step_budget: int = 20_000_000
    max_steps_per_test: int = 50_000
    max_validations: int | None = None
    jobs: int = 1
    audit: bool = False
    templates: TemplateConfig = TemplateConfig()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def budget(self) -> TraceBudget:
        return TraceBudget(self.top_locations, self.hit_limit, self.step_budget, self.max_steps_per_test)

    @property
    def limits(self) -> Limits:
        return self.budget.limits


@dataclass
class Analysis:
    """Everything shared by the baseline and every BAPP strategy."""

    project: Project
    program: A.Program
    base_runs: dict
    ochiai: ScoredRanking
    locations: list
    candidates: list
    priors: dict

    @property
    def failing(self) -> list:
        return [t for t in self.project.tests if not self.base_runs[t.id].passed]

    @property
    def passing(self) -> list:
        return [t for t in self.project.tests if self.base_runs[t.id].passed]


def analyze(project: Project, config: RepairConfig | None = None) -> Analysis:
    """Coverage, Ochiai ranking, candidate generation and priors."""
    config = config or RepairConfig()
    program = project.program
    suite = run_suite(program, project.tests, config.limits)
    if not suite.failing:
        raise ProjectError(f"{project.name}: no failing test on the unpatched program")
    matrix = suite.matrix()
    ochiai = sbfl_ranking(matrix, "ochiai")
    scores = {loc: s for loc, s in ochiai.entries}
    locations = [
        loc for loc in select_locations(matrix.failing_covered(), ochiai, config.top_locations) if scores[loc] > 0
    ]
    candidates = generate_at(program, locations, config.templates)
    p_l = location_prior({loc: scores[loc] for loc in locations})
    p_a = uniform_action_prior(candidates)
    priors = {c.id: PatchPrior(p_l[c.location], p_a[c.id]) for c in candidates}
    return Analysis(project, program, suite.runs, ochiai, locations, candidates, priors)


@dataclass(frozen=True)
class Validation:
    plausible: bool
    tests_run: int
    first_failure: str | None


class Validator:
    """Validate candidates: originally failing tests first, stop at first failure.

    Results are memoized per candidate, so strategies that validate the same
    patch share one verdict.
    """

    def __init__(self, analysis: Analysis, limits: Limits):
        self.analysis = analysis
        self.limits = limits
        self.cache: dict = {}
        self.order = analysis.failing + analysis.passing

    def patched(self, cand: PatchCandidate) -> A.Program:
        return apply_edit(self.analysis.program, cand.edit)

    def validate(self, cand: PatchCandidate) -> Validation:
        if cand.id not in self.cache:
            program = self.patched(cand)
            result = Validation(True, len(self.order), None)
            for i, t in enumerate(self.order, start=1):
                if not run_test(program, t, limits=self.limits).passed:
                    result = Validation(False, i, t.id)
                    break
            self.cache[cand.id] = result
        return self.cache[cand.id]

    def full_verdicts(self, cand: PatchCandidate) -> dict:
        program = self.patched(cand)
        return {t.id: run_test(program, t, limits=self.limits).verdict for t in self.analysis.project.tests}

    def first_plausible(self, ordered: Sequence[PatchCandidate], jobs: int = 1, cap: int | None = None):
        """(1-based rank, candidate) of the first plausible patch and the count validated.

        With ``jobs > 1`` candidates are validated in chunks, but the reported
        rank is always the position in ``ordered``.
        """
        ordered = list(ordered if cap is None else ordered[:cap])
        step = max(1, jobs)
        with ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else _Serial() as pool:
            for start in range(0, len(ordered), step):
                chunk = ordered[start:start + step]
                results = list(pool.map(self.validate, chunk))
                for offset, (cand, res) in enumerate(zip(chunk, results)):
                    if res.plausible:
                        rank = start + offset + 1
                        return rank, cand, rank
        return None, None, len(ordered)


class _Serial:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def map(self, fn, items):
        return map(fn, items)


@dataclass
class StrategyResult:
    strategy: str
    alpha: float | None
    order: list  # [(patch id, score or None)]
    first_plausible_rank: int | None
    first_plausible_id: str | None
    validations: int
    correct: bool | None
    fl_ranking: ScoredRanking
    ground_truth_rank: int | None
    acc_at_k: dict
    budget: dict

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "alpha": self.alpha,
            "first_plausible_rank": self.first_plausible_rank,
            "first_plausible_id": self.first_plausible_id,
            "validations": self.validations,
            "correct": self.correct,
            "ground_truth_rank": self.ground_truth_rank,
            "acc_at_k": {str(k): v for k, v in self.acc_at_k.items()},
            "budget": self.budget,
            "order": [[pid, _json_score(s)] for pid, s in self.order],
            "fl_ranking": self.fl_ranking.to_rows(),
        }


def _json_score(s):
    if s is None:
        return None
    if is_impossible(s):
        return "impossible"
    return float(s)


@dataclass
class RepairReport:
    project: str
    candidates: int
    locations: int
    results: list
    unranked_locations: list = field(default_factory=list)
    audit: dict | None = None
    note: str | None = None

    def result(self, strategy: str) -> StrategyResult | None:
        return next((r for r in self.results if r.strategy == strategy), None)

    @property
    def ratio(self) -> float | None:
        """First-plausible rank of the (first) BAPP strategy over the baseline's."""
        base = self.result("baseline")
        bapp = next((r for r in self.results if r.strategy != "baseline"), None)
        return rank_ratio(bapp, base)

    def to_dict(self) -> dict:
        return {
            "project": self.project,
            "candidates": self.candidates,
            "locations": self.locations,
            "note": self.note,
            "ratio": self.ratio,
            "unranked_locations": self.unranked_locations,
            "audit": self.audit,
            "results": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def rank_ratio(bapp: StrategyResult | None, base: StrategyResult | None) -> float | None:
    if bapp is None or base is None:
        return None
    if bapp.first_plausible_rank is None or base.first_plausible_rank is None:
        return None
    return bapp.first_plausible_rank / base.first_plausible_rank


def _truth_locations(project: Project) -> list:
    return list(project.truth.locations) if project.truth else []


def _fl_metrics(ranking: ScoredRanking, truth: list) -> tuple:
    if not truth:
        return None, {}
    return best_rank(ranking, truth), {k: acc_at_k(ranking, truth, k) for k in ACC_KS}


def _is_correct(analysis: Analysis, validator: Validator, cand: PatchCandidate | None):
    truth = analysis.project.truth
    if truth is None or cand is None:
        return None
    return validator.patched(cand) == truth.fixed_program()


def _empty_result(strategy, alpha, ranking, truth) -> StrategyResult:
    gt_rank, acc = _fl_metrics(ranking, truth)
    return StrategyResult(strategy, alpha, [], None, None, 0, None, ranking, gt_rank, acc, {})


def run_baseline(
    project: Project,
    config: RepairConfig | None = None,
    analysis: Analysis | None = None,
    validator: Validator | None = None,
) -> RepairReport:
    """Validate in generation order (location rank, template, AST position)."""
    config = config or RepairConfig()
    analysis = analysis or analyze(project, config)
    validator = validator or Validator(analysis, config.limits)
    truth = _truth_locations(project)
    report = RepairReport(project.name, len(analysis.candidates), len(analysis.locations), [])
    if not analysis.candidates:
        report.note = "no candidates"
        report.results.append(_empty_result("baseline", None, analysis.ochiai, truth))
        return report
    rank, cand, count = validator.first_plausible(analysis.candidates, config.jobs, config.max_validations)
    gt_rank, acc = _fl_metrics(analysis.ochiai, truth)
    report.results.append(
        StrategyResult(
            "baseline",
            None,
            [(c.id, None) for c in analysis.candidates],
            rank,
            cand.id if cand else None,
            count,
            _is_correct(analysis, validator, cand),
            analysis.ochiai,
            gt_rank,
            acc,
            {},
        )
    )
    if rank is None:
        report.note = "no plausible patch"
    return report


def trace_project(analysis: Analysis, config: RepairConfig) -> TraceState:
    scorer = location_scorer(analysis.priors, analysis.candidates, config.alpha)
    return trace(
        analysis.program, analysis.candidates, analysis.project.tests, analysis.base_runs, scorer, config.budget
    )


def bapp_order(analysis: Analysis, state: TraceState, config: RepairConfig) -> list:
    """``(candidate, score)`` pairs for the surviving candidates in validation order."""
    spectra = state.spectra
    by_id = {c.id: c for c in analysis.candidates}
    evidence = [PatchEvidence(c.id, c.location, spectra[c.id], analysis.priors[c.id]) for c in state.survivors]
    return [(by_id[e.id], s) for e, s in combine_strategy(evidence, config.alpha, config.mode)]


def marginal_ranking(analysis: Analysis, state: TraceState, alpha: float) -> ScoredRanking:
    spectra = state.spectra
    return marginal_fl(
        (c.id, c.location, bapp_score(spectra[c.id], analysis.priors[c.id], alpha)) for c in analysis.candidates
    )


def run_repair(
    project: Project,
    config: RepairConfig | None = None,
    analysis: Analysis | None = None,
    validator: Validator | None = None,
    state: TraceState | None = None,
) -> RepairReport:
    """SBFL, generate, trace, rank with ``config.mode`` and validate.

    ``state`` reuses an earlier trace made with the same alpha and budget.
    """
    config = config or RepairConfig()
    analysis = analysis or analyze(project, config)
    validator = validator or Validator(analysis, config.limits)
    truth = _truth_locations(project)
    report = RepairReport(project.name, len(analysis.candidates), len(analysis.locations), [])
    if not analysis.candidates:
        report.note = "no candidates"
        report.results.append(_empty_result(config.mode, config.alpha, analysis.ochiai, truth))
        return report
    state = state or trace_project(analysis, config)
    ordered = bapp_order(analysis, state, config)
    rank, cand, count = validator.first_plausible([c for c, _ in ordered], config.jobs, config.max_validations)
    fl = marginal_ranking(analysis, state, config.alpha)
    gt_rank, acc = _fl_metrics(fl, truth)
    budget = {
        "steps_used": state.steps_used,
        "step_budget": config.step_budget,
        "exhausted": state.exhausted,
        "failing_traced": len(state.failing_traced),
        "passing_traced": len(state.passing_traced) + len(state.passing_unrun),
        "passing_run": len(state.passing_traced),
        "discarded": len(state.discarded),
        "survivors": len(state.survivors),
    }
    report.results.append(
        StrategyResult(
            config.mode,
            config.alpha,
            [(c.id, s) for c, s in ordered],
            rank,
            cand.id if cand else None,
            count,
            _is_correct(analysis, validator, cand),
            fl,
            gt_rank,
            acc,
            budget,
        )
    )
    report.unranked_locations = unranked_locations(fl, analysis.locations)
    if config.audit:
        report.audit = audit_discarded(state, validator)
    if rank is None:
        report.note = "no plausible patch"
    return report


def audit_discarded(state: TraceState, validator: Validator) -> dict:
    """Validate every discarded candidate; any plausible one is a filter error."""
    plausible = [c.id for c in state.discarded if validator.validate(c).plausible]
    return {"discarded": len(state.discarded), "discarded_plausible": plausible}


def compare(project: Project, config: RepairConfig | None = None) -> RepairReport:
    """BAPP under ``config`` plus the baseline, sharing one analysis and validator."""
    config = config or RepairConfig()
    analysis = analyze(project, config)
    validator = Validator(analysis, config.limits)
    report = run_repair(project, config, analysis, validator)
    base = run_baseline(project, config, analysis, validator)
    report.results.insert(0, base.results[0])
    return report


def plausible_by_suite(validator: Validator, cand: PatchCandidate) -> bool:
    return gv_plausible(validator.full_verdicts(cand))


__all__ = [
    "ACC_KS",
    "Analysis",
    "GroundTruth",
    "Project",
    "ProjectError",
    "RepairConfig",
    "RepairReport",
    "StrategyResult",
    "Validation",
    "Validator",
    "analyze",
    "audit_discarded",
    "bapp_order",
    "compare",
    "marginal_ranking",
    "plausible_by_suite",
    "rank_ratio",
    "run_baseline",
    "run_repair",
    "trace_project",
]
