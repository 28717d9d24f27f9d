"""The patch hypothesis space and its scoring rules.

BAPP scores are base-2 logarithms: with ``p = 1 - 2**-alpha`` the score of a
patch that changes every failing test is ``-alpha * c_p + log2 P(a|l) +
log2 P(l)``.  Working in base 2 keeps dyadic priors and integer ``alpha``
exact, so mathematically tied patches tie in floating point too.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .bayes import IMPOSSIBLE, LikelihoodModel, LogPosterior, log_marginalize, score_key
from .minilang.values import values_equal
from .sbfl import ParameterError, ScoredRanking, rank

TEMPLATES = (
    "ParameterReplacer",
    "ParameterAdder",
    "ParameterRemover",
    "MethodReplacer",
    "ConditionalReplacer",
    "ConditionalAdder",
    "ConditionalRemover",
    "NullChecker",
    "CastChecker",
)
MODES = ("multiply", "fl-first", "dyn-first")


@dataclass(frozen=True)
class PatchCandidate:
    """One (location, repair action) hypothesis.

    ``probe`` is ``"replace"`` (compare ``old_expr`` and ``new_expr``),
    ``"guard"`` (``new_expr`` is a guard condition; true means the inserted
    branch fires) or ``"none"`` (no side-effect-free probe exists).
    """

    id: str
    location: str
    template: str
    edit: Mapping
    probe: str = "none"
    old_expr: str | None = None
    new_expr: str | None = None
    target_stmt: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "location": self.location,
            "template": self.template,
            "payload": dict(self.edit),
            "probes": {"kind": self.probe, "old": self.old_expr, "new": self.new_expr},
        }


@dataclass(frozen=True)
class PatchPrior:
    p_l: float
    p_a_given_l: float

    def log2(self):
        if self.p_l <= 0 or self.p_a_given_l <= 0:
            return IMPOSSIBLE
        return math.fsum([math.log2(self.p_a_given_l), math.log2(self.p_l)])


@dataclass(frozen=True)
class ChangeSpectrum:
    """Behavior-change counts for one patch.

    ``u_f``/``u_p`` count failing/passing tests the patch leaves unchanged.
    ``unknown`` marks patches whose probes could not be evaluated.
    """

    c_f: int
    c_p: int
    u_f: int
    u_p: int
    unknown: bool = False

    def __post_init__(self):
        if min(self.c_f, self.c_p, self.u_f, self.u_p) < 0:
            raise ValueError(f"negative count in {self!r}")

    @property
    def F_observed(self) -> int:
        return self.c_f + self.u_f

    @property
    def passing_traced(self) -> int:
        return self.c_p + self.u_p

    @property
    def filtered(self) -> bool:
        return self.c_f < self.F_observed


def alpha_to_p(alpha: float) -> float:
    return 1.0 - 2.0 ** -alpha


def p_to_alpha(p: float) -> float:
    return -math.log2(1.0 - p)


def _check_alpha(alpha) -> float:
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha!r}")
    return float(alpha)


def bapp_score(spectrum: ChangeSpectrum, prior: PatchPrior, alpha: float):
    """Base-2 log posterior score of a patch, or IMPOSSIBLE when c_f < F."""
    alpha = _check_alpha(alpha)
    if spectrum.filtered:
        return IMPOSSIBLE
    if prior.p_l <= 0 or prior.p_a_given_l <= 0:
        return IMPOSSIBLE
    return math.fsum(
        [-alpha * spectrum.c_p, math.log2(prior.p_a_given_l), math.log2(prior.p_l)]
    )


def bapp_linear(spectrum: ChangeSpectrum, prior: PatchPrior, alpha: float) -> float:
    """The same score as a plain product, (1-p)**c_p * P(a|l) * P(l)."""
    alpha = _check_alpha(alpha)
    if spectrum.filtered:
        return 0.0
    return (1.0 - alpha_to_p(alpha)) ** spectrum.c_p * prior.p_a_given_l * prior.p_l


def bapp_likelihood_model(p) -> LikelihoodModel:
    """P(verdict | whether the hypothesised fix changes the test's behavior)."""
    return LikelihoodModel(
        {
            ("changed", "fail"): p,
            ("changed", "pass"): 1 - p,
            ("unchanged", "fail"): 0,
            ("unchanged", "pass"): 1,
        }
    )


def count_per_location(candidates: Iterable[PatchCandidate]) -> dict:
    """N_l: number of candidates generated at each location."""
    return dict(Counter(c.location for c in candidates))


def uniform_action_prior(candidates: Sequence[PatchCandidate]) -> dict:
    """P(a|l) = 1/N_l for every candidate, as an exact fraction."""
    counts = count_per_location(candidates)
    return {c.id: Fraction(1, counts[c.location]) for c in candidates}


def location_prior(scores: Mapping[str, float]) -> dict:
    """Normalize non-negative location scores to sum to one; zero scores drop out."""
    kept = {loc: s for loc, s in scores.items() if s > 0}
    total = math.fsum(kept.values())
    if total == 0:
        return {}
    return {loc: s / total for loc, s in kept.items()}


def marginal_fl(scored: Iterable[tuple]) -> ScoredRanking:
    """Location ranking by summing patch posteriors over repair actions.

    ``scored`` holds ``(patch_id, location, log2_score)`` triples.  Locations
    with no patches cannot appear; see :func:`unranked_locations`.
    """
    scored = list(scored)
    where = {pid: loc for pid, loc, _ in scored}
    post = LogPosterior({pid: s for pid, _, s in scored})
    groups = log_marginalize(post, where.__getitem__, base=2.0)
    return rank(groups.scores)


def unranked_locations(ranking: ScoredRanking, locations: Iterable[str]) -> list:
    present = set(ranking.rank_of)
    return [loc for loc in locations if loc not in present]


@dataclass(frozen=True)
class SeAprParams:
    p1: float
    p2: float

    def __post_init__(self):
        if not 0 < self.p2 < self.p1 < 1:
            raise ParameterError(f"need 0 < p2 < p1 < 1, got p1={self.p1}, p2={self.p2}")

    @property
    def gamma(self) -> float:
        return math.log((1 - self.p2) / (1 - self.p1)) / math.log(self.p1 / self.p2)


@dataclass(frozen=True)
class PatchQualityCounts:
    """High-quality (p_plus) and low-quality (p_minus) validated patches at a location."""

    p_plus: int
    p_minus: int


def seapr_score(counts: PatchQualityCounts, params) -> float:
    """Unified-debugging location score ``p_plus - gamma * p_minus``.

    ``params`` is a :class:`SeAprParams` or an explicit gamma.
    """
    gamma = params.gamma if isinstance(params, SeAprParams) else float(params)
    return counts.p_plus - gamma * counts.p_minus


def seapr_likelihood_model(p1, p2) -> LikelihoodModel:
    """P(patch quality | patch shares the hypothesised fix location)."""
    return LikelihoodModel(
        {
            ("same", "high"): p1,
            ("same", "low"): 1 - p1,
            ("other", "high"): p2,
            ("other", "low"): 1 - p2,
        }
    )


def seapr_evidence(counts: Mapping[str, PatchQualityCounts]) -> list:
    """One observation per validated patch, for Bayes updates over locations."""
    evidence = []
    for loc, c in counts.items():
        same = lambda h, loc=loc: "same" if h == loc else "other"
        evidence += [("high", same)] * c.p_plus + [("low", same)] * c.p_minus
    return evidence


def gv_plausible(results: Mapping[str, str]) -> bool:
    """True iff every test in the suite passes under the patch."""
    if not results:
        raise ValueError("empty test suite: at least one failing test is required")
    for t, verdict in results.items():
        if verdict not in ("pass", "fail"):
            raise ValueError(f"test {t!r}: unknown verdict {verdict!r}")
    return all(v == "pass" for v in results.values())


def gv_likelihood_model(p) -> LikelihoodModel:
    """Validation model: the true fix passes everything; others may by chance."""
    return LikelihoodModel(
        {
            ("self", "all-pass"): 1,
            ("self", "some-fail"): 0,
            ("other", "all-pass"): p,
            ("other", "some-fail"): 1 - p,
        }
    )


class AngelicTraceError(KeyError):
    pass


@dataclass(frozen=True)
class AngelicSpec:
    expected: Mapping[str, object] = field(default_factory=dict)


def angelic_filter(traced: Mapping[str, object], spec: AngelicSpec) -> str:
    """``"discard"`` if the traced value deviates from the angelic value on any test."""
    for t, v in spec.expected.items():
        if t not in traced:
            raise AngelicTraceError(f"no traced value for test {t!r}")
        if not values_equal(traced[t], v):
            return "discard"
    return "keep"


@dataclass(frozen=True)
class PatchEvidence:
    id: str
    location: str
    spectrum: ChangeSpectrum
    prior: PatchPrior


def combine_strategy(
    patches: Sequence[PatchEvidence], alpha: float, mode: str = "multiply"
) -> list:
    """Order patches for validation; returns ``(PatchEvidence, score)`` pairs.

    ``multiply`` ranks by :func:`bapp_score`; ``fl-first`` by P(l), then c_p,
    then P(a|l); ``dyn-first`` by c_p, then P(a|l)P(l).  Patches with
    c_f < F_observed come last in every mode.  Ties keep input order.
    """
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}; expected one of {MODES}")
    scores = {e.id: bapp_score(e.spectrum, e.prior, alpha) for e in patches}

    if mode == "multiply":
        key = lambda e: (score_key(scores[e.id]),)
    elif mode == "fl-first":
        key = lambda e: (e.prior.p_l, -e.spectrum.c_p, e.prior.p_a_given_l)
    else:
        key = lambda e: (-e.spectrum.c_p, score_key(e.prior.log2()))

    live = [e for e in patches if not e.spectrum.filtered]
    dead = [e for e in patches if e.spectrum.filtered]
    ordered = sorted(live, key=key, reverse=True) + dead
    return [(e, scores[e.id]) for e in ordered]
