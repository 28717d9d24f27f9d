"""Spectrum-based fault localization.

Classic formulae plus the Bayesian one derived from a single-fault model in
which a failing test must cover the fault and a covering test fails with
probability ``p``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .bayes import (
    IMPOSSIBLE,
    LikelihoodModel,
    LogPosterior,
    batch_update,
    score_key,
)

log = logging.getLogger(__name__)

FORMULAE = ("ochiai", "naish01", "binary", "wong2", "bayes")
VERDICTS = ("pass", "fail")


class CoverageError(ValueError):
    """A coverage matrix violates one of its invariants."""


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class CoverageMatrix:
    """Per-test execution counts over an ordered list of program elements."""

    elements: tuple
    tests: tuple
    verdicts: Mapping[str, str]
    exec_counts: Mapping[str, Mapping[str, int]]

    def __post_init__(self):
        known = set(self.elements)
        if len(known) != len(self.elements):
            raise CoverageError("duplicate element ids")
        if len(set(self.tests)) != len(self.tests):
            raise CoverageError("duplicate test ids")
        for t in self.tests:
            verdict = self.verdicts.get(t)
            if verdict not in VERDICTS:
                raise CoverageError(f"test {t!r}: unknown verdict {verdict!r}")
            for loc, count in self.exec_counts.get(t, {}).items():
                if loc not in known:
                    raise CoverageError(f"test {t!r} covers unknown element {loc!r}")
                if not isinstance(count, int) or count <= 0:
                    raise CoverageError(
                        f"test {t!r}: element {loc!r} listed as covered with count {count!r}"
                    )
        if not self.failing:
            raise CoverageError(
                "coverage matrix has no failing test (at least one failing test is required)"
            )

    @property
    def failing(self) -> list:
        return [t for t in self.tests if self.verdicts[t] == "fail"]

    @property
    def passing(self) -> list:
        return [t for t in self.tests if self.verdicts[t] == "pass"]

    @property
    def covered(self) -> dict:
        return {t: frozenset(self.exec_counts.get(t, {})) for t in self.tests}

    def covers(self, test: str, loc: str) -> bool:
        return loc in self.exec_counts.get(test, {})

    def failing_covered(self) -> set:
        """Elements executed by at least one failing test."""
        out: set = set()
        for t in self.failing:
            out.update(self.exec_counts.get(t, {}))
        return out


@dataclass(frozen=True)
class CoverageSpectrum:
    e_f: int
    e_p: int
    n_f: int
    n_p: int

    @property
    def F(self) -> int:
        return self.e_f + self.n_f

    @property
    def P(self) -> int:
        return self.e_p + self.n_p


def compute_spectra(matrix: CoverageMatrix) -> dict:
    F = len(matrix.failing)
    P = len(matrix.passing)
    e_f = dict.fromkeys(matrix.elements, 0)
    e_p = dict.fromkeys(matrix.elements, 0)
    for t in matrix.tests:
        bucket = e_f if matrix.verdicts[t] == "fail" else e_p
        for loc in matrix.exec_counts.get(t, {}):
            bucket[loc] += 1
    return {
        loc: CoverageSpectrum(e_f[loc], e_p[loc], F - e_f[loc], P - e_p[loc])
        for loc in matrix.elements
    }


def _check_p(p) -> float:
    if p is None or not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie strictly between 0 and 1, got {p!r}")
    return float(p)


def bayes_log_score(s: CoverageSpectrum, p: float):
    """Natural-log posterior score up to a constant; IMPOSSIBLE if e_f < F."""
    p = _check_p(p)
    if s.e_f < s.F:
        return IMPOSSIBLE
    return s.e_p * math.log1p(-p)


def bayes_limit_log_score(s: CoverageSpectrum):
    """The p -> 0 limit of :func:`bayes_log_score`: every e_p factor tends to 1."""
    if s.e_f < s.F:
        return IMPOSSIBLE
    return 0.0


def formula_score(s: CoverageSpectrum, formula: str, p: float | None = None):
    """Suspiciousness of one element.  ``bayes`` returns IMPOSSIBLE for e_f < F."""
    if formula == "ochiai":
        denom = math.sqrt((s.e_f + s.n_f) * (s.e_f + s.e_p))
        return 0.0 if s.e_f == 0 or denom == 0 else s.e_f / denom
    if formula == "naish01":
        return -1.0 if s.n_f > 0 else float(s.n_p)
    if formula == "binary":
        return 0.0 if s.n_f > 0 else 1.0
    if formula == "wong2":
        return float(s.e_f - s.e_p)
    if formula == "bayes":
        score = bayes_log_score(s, p)
        return IMPOSSIBLE if score is IMPOSSIBLE else math.exp(score)
    raise ParameterError(f"unknown formula {formula!r}; expected one of {FORMULAE}")


@dataclass
class ScoredRanking:
    """Hypotheses sorted by descending score, with max-rank tie handling."""

    entries: list
    rank_of: dict = field(default_factory=dict)

    def ids(self) -> list:
        return [h for h, _ in self.entries]

    def score_of(self, h):
        return dict(self.entries)[h]

    def to_rows(self) -> list:
        return [
            {"id": h, "score": _score_out(s), "rank": self.rank_of[h]}
            for h, s in self.entries
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["id", "score", "rank"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.to_rows())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_rows(), indent=2)


def _score_out(score):
    return "impossible" if score is IMPOSSIBLE else score


def rank(scores: Mapping, policy: str = "max-rank") -> ScoredRanking:
    """Sort ``scores`` descending; tied ids share the rank of the group's last slot.

    Equal scores keep their input order, so the result is deterministic.
    """
    if policy != "max-rank":
        raise ParameterError(f"unsupported tie policy {policy!r}")
    # reverse=True keeps equal-score items in input order
    ordered = sorted(scores.items(), key=lambda kv: score_key(kv[1]), reverse=True)
    rank_of = {}
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1][1] == ordered[i][1]:
            j += 1
        for h, _ in ordered[i : j + 1]:
            rank_of[h] = j + 1
        i = j + 1
    return ScoredRanking(ordered, rank_of)


def score_matrix(matrix: CoverageMatrix, formula: str, p: float | None = None) -> dict:
    spectra = compute_spectra(matrix)
    return {loc: formula_score(s, formula, p) for loc, s in spectra.items()}


def sbfl_ranking(matrix: CoverageMatrix, formula: str, p: float | None = None) -> ScoredRanking:
    return rank(score_matrix(matrix, formula, p))


def bayesian_sbfl(matrix: CoverageMatrix, p: float) -> ScoredRanking:
    """Closed-form posterior ranking under the single-fault coverage model."""
    spectra = compute_spectra(matrix)
    return rank({loc: bayes_log_score(s, p) for loc, s in spectra.items()})


def sbfl_likelihood_model(p: float) -> LikelihoodModel:
    """P(verdict | coverage relation of the candidate fault to the test)."""
    p = _check_p(p)
    return LikelihoodModel(
        {
            ("covered", "fail"): p,
            ("covered", "pass"): 1.0 - p,
            ("uncovered", "fail"): 0.0,
            ("uncovered", "pass"): 1.0,
        }
    )


def sbfl_evidence(matrix: CoverageMatrix) -> list:
    """One (verdict, relation_of) observation per test, for :func:`batch_update`."""
    evidence = []
    for t in matrix.tests:
        cov = matrix.covered[t]
        evidence.append(
            (matrix.verdicts[t], lambda loc, cov=cov: "covered" if loc in cov else "uncovered")
        )
    return evidence


def bayesian_sbfl_by_inference(matrix: CoverageMatrix, p: float) -> ScoredRanking:
    """Same ranking as :func:`bayesian_sbfl`, computed by iterated Bayes updates."""
    prior = LogPosterior.uniform(list(matrix.elements))
    post = batch_update(prior, sbfl_likelihood_model(p), sbfl_evidence(matrix))
    return rank(post.scores)


def acc_at_k(ranking: ScoredRanking, ground_truth: Iterable, k: int) -> int:
    """1 if any ground-truth element is ranked within the top ``k``, else 0."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    truth = set(ground_truth)
    present = [ranking.rank_of[g] for g in truth if g in ranking.rank_of]
    if not present:
        log.warning("ground truth %s absent from ranking; counted as a miss", sorted(truth))
        return 0
    return int(min(present) <= k)


def best_rank(ranking: ScoredRanking, ground_truth: Iterable):
    """Best (smallest) rank of any ground-truth element, or None if absent."""
    ranks = [ranking.rank_of[g] for g in ground_truth if g in ranking.rank_of]
    return min(ranks) if ranks else None


_HEADER = re.compile(r"^tests\s+(\d+)\s+elements\s+(\d+)$")


def parse_coverage(text: str, source: str = "<coverage>") -> CoverageMatrix:
    """Parse the line-oriented coverage format.

    ::

        tests <N> elements <M>
        [elements <id> <id> ...]
        <test-id> <pass|fail> <loc:count> ...

    Blank lines and ``#`` comments are ignored.  Without an explicit
    ``elements`` line, elements are ordered by first appearance.
    """

    def fail(lineno: int, msg: str):
        raise CoverageError(f"{source}:{lineno}: {msg}")

    lines = [
        (i, ln.strip())
        for i, ln in enumerate(text.splitlines(), start=1)
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if not lines:
        raise CoverageError(f"{source}: empty coverage file")
    lineno, header = lines[0]
    m = _HEADER.match(header)
    if not m:
        fail(lineno, f"expected header 'tests <N> elements <M>', got {header!r}")
    n_tests, n_elements = int(m.group(1)), int(m.group(2))
    body = lines[1:]
    declared = None
    if body and body[0][1].split()[0] == "elements":
        declared = body[0][1].split()[1:]
        if len(declared) != n_elements:
            fail(body[0][0], f"header declares {n_elements} elements, line lists {len(declared)}")
        body = body[1:]

    tests, verdicts, counts = [], {}, {}
    seen: dict = {} if declared is None else dict.fromkeys(declared)
    for lineno, line in body:
        parts = line.split()
        if len(parts) < 2:
            fail(lineno, "malformed row: expected '<test-id> <pass|fail> <loc:count>...'")
        tid, verdict = parts[0], parts[1]
        if verdict not in VERDICTS:
            fail(lineno, f"unknown verdict {verdict!r} for test {tid!r}")
        if tid in verdicts:
            fail(lineno, f"duplicate test id {tid!r}")
        row = {}
        for cell in parts[2:]:
            loc, sep, num = cell.rpartition(":")
            if not sep or not loc or not re.fullmatch(r"\d+", num):
                fail(lineno, f"malformed cell {cell!r}; expected '<loc>:<count>'")
            count = int(num)
            if count == 0:
                fail(lineno, f"element {loc!r} listed as covered but count is 0")
            if declared is not None and loc not in seen:
                fail(lineno, f"element {loc!r} not declared in the elements line")
            if loc in row:
                fail(lineno, f"element {loc!r} listed twice")
            seen.setdefault(loc, None)
            row[loc] = count
        tests.append(tid)
        verdicts[tid] = verdict
        counts[tid] = row
    if len(tests) != n_tests:
        raise CoverageError(f"{source}: header declares {n_tests} tests, found {len(tests)}")
    if declared is None and len(seen) != n_elements:
        raise CoverageError(
            f"{source}: header declares {n_elements} elements, found {len(seen)}"
        )
    if not any(v == "fail" for v in verdicts.values()):
        raise CoverageError(
            f"{source}: no failing test; at least one failing test case is required"
        )
    return CoverageMatrix(tuple(seen), tuple(tests), verdicts, counts)


def load_coverage(path) -> CoverageMatrix:
    path = Path(path)
    return parse_coverage(path.read_text(encoding="utf-8"), source=str(path))


def dump_coverage(matrix: CoverageMatrix) -> str:
    lines = [
        f"tests {len(matrix.tests)} elements {len(matrix.elements)}",
        "elements " + " ".join(matrix.elements),
    ]
    for t in matrix.tests:
        cells = " ".join(f"{loc}:{n}" for loc, n in matrix.exec_counts.get(t, {}).items())
        lines.append(f"{t} {matrix.verdicts[t]} {cells}".rstrip())
    return "\n".join(lines) + "\n"


def ranks_equal(a: ScoredRanking, b: ScoredRanking, ids: Sequence | None = None) -> bool:
    keys = ids if ids is not None else list(a.rank_of)
    return all(a.rank_of[k] == b.rank_of[k] for k in keys) and set(a.rank_of) == set(b.rank_of)
