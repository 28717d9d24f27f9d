"""Value incorporation: probe candidates on failing, then passing, tests.

Failing tests run first.  A candidate is *changed* on a failing test when any
probe hit in the window shows a different value (or a true guard).
Candidates unchanged on every traced failing test are discarded.  Passing
tests then run in priority order.  A candidate gains ``c_p`` on a passing
test only if the value differs at *every* hit of its location in that test.
So the failing rule needs one hit and the passing rule needs all of them.

All candidates share one probed run per test, which is safe because probes
cannot have side effects.  The wall-clock cap is replaced by a
deterministic interpreter-step budget.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .bayes import log_sum, score_key
from .minilang import ast as A
from .minilang.interp import ABSENT, Limits, Marker, Probe, ProbeSet, TraceEvent
from .minilang.parser import parse_expr
from .minilang.testing import TestCase, TestRun, run_test
from .minilang.values import to_json, values_equal
from .patches import ChangeSpectrum, PatchCandidate, bapp_score

CHANGED, UNCHANGED, UNKNOWN = "changed", "unchanged", "unknown"


@dataclass(frozen=True)
class TraceBudget:
    """Tracing limits: locations, hits per breakpoint, and total steps."""

    top_k: int = 200
    hit_limit: int = 100
    step_budget: int = 20_000_000
    max_steps_per_test: int = 50_000
    max_depth: int = 150

    def __post_init__(self):
        for name in ("top_k", "hit_limit", "step_budget", "max_steps_per_test", "max_depth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def limits(self) -> Limits:
        return Limits(self.max_steps_per_test, self.max_depth, self.hit_limit)


def budget(**kw) -> TraceBudget:
    """Validated budget record (all fields positive)."""
    return TraceBudget(**kw)


def build_probes(program: A.Program, candidates: Sequence[PatchCandidate]) -> ProbeSet:
    """One probe per probing candidate, attached to its target statement."""
    probes = ProbeSet()
    for c in candidates:
        if c.probe == "none":
            continue
        stmt = program.node(c.target_stmt)
        line = stmt.loc.line
        old = None if c.old_expr is None else parse_expr(c.old_expr, stmt.loc.file, line=line)
        new = parse_expr(c.new_expr, stmt.loc.file, line=line)
        probes.add(c.target_stmt, Probe(c.id, c.probe, old, new))
    return probes


UNEVALUABLE = ("fault:user-call", "fault:recursion")


def hit_change(kind: str, old, new) -> str:
    """Classify one probe hit.

    A runtime fault is an outcome like any value: a replacement that faults
    where the original produced a value changes behavior.  Only probes that
    could not be evaluated at all (user calls) are unknown.
    """
    if any(isinstance(v, Marker) and v.kind in UNEVALUABLE for v in (old, new)):
        return UNKNOWN
    if kind == "guard":
        if new is True:
            return CHANGED
        return UNCHANGED if new is False else UNKNOWN
    if isinstance(old, Marker) or isinstance(new, Marker):
        return UNCHANGED if old == new else CHANGED
    return UNCHANGED if values_equal(old, new) else CHANGED


def failing_status(kinds: Sequence[str]) -> str:
    """Any changed hit changes a failing test; no hits means unchanged."""
    if CHANGED in kinds:
        return CHANGED
    return UNKNOWN if UNKNOWN in kinds else UNCHANGED


def passing_changed(kinds: Sequence[str]) -> bool:
    """A passing test counts toward c_p only if every hit changed."""
    return bool(kinds) and all(k == CHANGED for k in kinds)


def _hits_by_patch(events: Sequence[TraceEvent]) -> dict:
    out: dict = {}
    for ev in events:
        out.setdefault(ev.patch_id, []).append(ev)
    return out


@dataclass
class TraceState:
    """Spectra under construction plus the bookkeeping for reports."""

    candidates: list
    failing_traced: list = field(default_factory=list)
    passing_traced: list = field(default_factory=list)
    passing_unrun: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)  # id -> [c_f, c_p, u_f, u_p]
    events: list = field(default_factory=list)
    steps_used: int = 0
    exhausted: bool = False
    discarded: list = field(default_factory=list)

    def __post_init__(self):
        for c in self.candidates:
            self.counts.setdefault(c.id, [0, 0, 0, 0])

    def spectrum(self, c: PatchCandidate) -> ChangeSpectrum:
        c_f, c_p, u_f, u_p = self.counts[c.id]
        return ChangeSpectrum(c_f, c_p, u_f, u_p, unknown=c.probe == "none")

    @property
    def spectra(self) -> dict:
        return {c.id: self.spectrum(c) for c in self.candidates}

    @property
    def survivors(self) -> list:
        gone = {c.id for c in self.discarded}
        return [c for c in self.candidates if c.id not in gone]

    def fits(self, run: TestRun, b: TraceBudget) -> bool:
        if self.steps_used + run.steps > b.step_budget:
            self.exhausted = True
            return False
        self.steps_used += run.steps
        return True


def _probed_run(program, test, candidates, b: TraceBudget, base: TestRun) -> TestRun:
    probes = build_probes(program, candidates)
    return run_test(program, test, probes, b.limits, stmt_counts=base.stmt_counts)


def trace_failing(
    program: A.Program,
    candidates: Sequence[PatchCandidate],
    failing_tests: Sequence[TestCase],
    limits: TraceBudget | None = None,
    base_runs: Mapping[str, TestRun] | None = None,
    state: TraceState | None = None,
) -> TraceState:
    """Trace failing tests in order and discard never-changed candidates.

    Candidates without probes count as changed on every traced failing test,
    so they are neither filtered nor penalized.
    """
    b = limits or TraceBudget()
    st = state or TraceState(list(candidates))
    base_runs = base_runs or {}
    for t in failing_tests:
        base = base_runs.get(t.id) or run_test(program, t, limits=b.limits)
        if not st.fits(base, b):
            break
        run = _probed_run(program, t, st.candidates, b, base)
        st.events.extend(run.events)
        hits = _hits_by_patch(run.events)
        for c in st.candidates:
            if c.probe == "none":
                status = UNKNOWN
            else:
                status = failing_status(
                    [hit_change(c.probe, e.old_value, e.new_value) for e in hits.get(c.id, [])]
                )
            counts = st.counts[c.id]
            if status == UNCHANGED:
                counts[2] += 1
            else:
                counts[0] += 1
        st.failing_traced.append(t.id)
    if st.failing_traced:
        st.discarded = [c for c in st.candidates if st.counts[c.id][0] == 0]
    return st


ScoreFn = Callable[[dict], Mapping[str, object]]


def passing_priority(line_counts: Mapping[str, int], location_scores: Mapping[str, object]):
    """Base-2 log of the summed linear scores of the locations a test covers."""
    return log_sum((location_scores[loc] for loc in line_counts if loc in location_scores), base=2)


def trace_passing(
    program: A.Program,
    survivors: Sequence[PatchCandidate],
    passing_tests: Sequence[TestCase],
    current_scores: ScoreFn | Mapping[str, object],
    limits: TraceBudget | None = None,
    base_runs: Mapping[str, TestRun] | None = None,
    state: TraceState | None = None,
) -> TraceState:
    """Trace passing tests by descending priority until the budget runs out.

    ``current_scores`` maps locations to base-2 log scores, or is a function
    of the current spectra returning such a mapping; a function is
    re-evaluated after every traced test.  Ties go to test-id order.  Tests
    that execute no survivor location cannot change any spectrum; they count
    as unchanged without being run.
    """
    b = limits or TraceBudget()
    st = state or TraceState(list(survivors))
    live = list(survivors)
    base_runs = dict(base_runs or {})
    for t in passing_tests:
        if t.id not in base_runs:
            base_runs[t.id] = run_test(program, t, limits=b.limits)
    live_locs = {c.location for c in live}
    pending = []
    for t in sorted(passing_tests, key=lambda t: t.id):
        if live_locs.intersection(base_runs[t.id].line_counts):
            pending.append(t)
        else:
            st.passing_unrun.append(t.id)
            for c in live:
                st.counts[c.id][3] += 1
    probes_for = {c.id: c for c in live if c.probe != "none"}
    while pending:
        scores = current_scores(st.spectra) if callable(current_scores) else current_scores
        best = max(
            range(len(pending)),
            key=lambda i: (score_key(passing_priority(base_runs[pending[i].id].line_counts, scores)), -i),
        )
        t = pending.pop(best)
        base = base_runs[t.id]
        if not st.fits(base, b):
            break
        run = _probed_run(program, t, list(probes_for.values()), b, base)
        st.events.extend(run.events)
        hits = _hits_by_patch(run.events)
        for c in live:
            kinds = [hit_change(c.probe, e.old_value, e.new_value) for e in hits.get(c.id, [])]
            if c.probe != "none" and passing_changed(kinds):
                st.counts[c.id][1] += 1
            else:
                st.counts[c.id][3] += 1
        st.passing_traced.append(t.id)
    return st


def location_scorer(priors: Mapping[str, object], candidates: Sequence[PatchCandidate], alpha: float) -> ScoreFn:
    """Marginal base-2 location scores from the current spectra."""

    def scores(spectra: Mapping[str, ChangeSpectrum]) -> dict:
        grouped: dict = {}
        for c in candidates:
            s = bapp_score(spectra[c.id], priors[c.id], alpha)
            grouped.setdefault(c.location, []).append(s)
        return {loc: log_sum(vals, base=2) for loc, vals in grouped.items()}

    return scores


def trace(
    program: A.Program,
    candidates: Sequence[PatchCandidate],
    tests: Sequence[TestCase],
    base_runs: Mapping[str, TestRun],
    current_scores: ScoreFn | Mapping[str, object],
    limits: TraceBudget | None = None,
) -> TraceState:
    """Failing tests first, then passing tests over the survivors."""
    failing = [t for t in tests if not base_runs[t.id].passed]
    passing = [t for t in tests if base_runs[t.id].passed]
    st = trace_failing(program, candidates, failing, limits, base_runs)
    survivors = st.survivors
    return trace_passing(program, survivors, passing, current_scores, limits, base_runs, st)


def events_to_jsonl(events: Sequence[TraceEvent]) -> str:
    def value(v):
        if v is ABSENT:
            return {"marker": "absent"}
        if isinstance(v, Marker):
            return {"marker": v.kind}
        return to_json(v)

    lines = []
    for e in events:
        lines.append(json.dumps({
            "patch_id": e.patch_id,
            "test_id": e.test_id,
            "location": e.location,
            "hit_index": e.hit_index,
            "old_value": value(e.old_value),
            "new_value": value(e.new_value),
        }, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def spectra_to_csv(candidates: Sequence[PatchCandidate], spectra: Mapping[str, ChangeSpectrum]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["patch_id", "c_f", "c_p", "u_f", "u_p"])
    for c in candidates:
        s = spectra[c.id]
        w.writerow([c.id, s.c_f, s.c_p, s.u_f, s.u_p])
    return buf.getvalue()


__all__ = [
    "CHANGED",
    "UNCHANGED",
    "UNKNOWN",
    "TraceBudget",
    "TraceState",
    "budget",
    "build_probes",
    "hit_change",
    "failing_status",
    "passing_changed",
    "trace_failing",
    "trace_passing",
    "trace",
    "passing_priority",
    "location_scorer",
    "events_to_jsonl",
    "spectra_to_csv",
]
