"""Bayesian inference over finite hypothesis spaces, in the log domain.

Scores are natural logarithms of unnormalized probabilities.  Probability
zero is represented by the :data:`IMPOSSIBLE` sentinel rather than ``-inf`` so
that exact-zero semantics survive arithmetic without NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence


class ConfigurationError(ValueError):
    """A likelihood model is missing an entry that inference needed."""


class AllImpossibleError(ArithmeticError):
    """Every hypothesis has probability zero; normalization is undefined."""


class _Impossible:
    __slots__ = ()

    def __repr__(self) -> str:
        return "IMPOSSIBLE"

    def __reduce__(self):
        return "IMPOSSIBLE"


IMPOSSIBLE = _Impossible()


def is_impossible(score) -> bool:
    return score is IMPOSSIBLE


def ext_log(prob: float):
    """Log of a probability, mapping exact zero to IMPOSSIBLE."""
    if not 0 <= prob <= 1:
        raise ValueError(f"not a probability: {prob!r}")
    if prob == 0:
        return IMPOSSIBLE
    return math.log(prob)


def log_mul(*scores):
    """Log-domain product; IMPOSSIBLE absorbs."""
    if any(s is IMPOSSIBLE for s in scores):
        return IMPOSSIBLE
    return math.fsum(scores)


def log_sum(scores: Iterable, base: float = math.e):
    """Log-domain sum (log-sum-exp); IMPOSSIBLE is the identity.

    ``base`` selects the logarithm base of both inputs and output.
    """
    finite = [s for s in scores if s is not IMPOSSIBLE]
    if not finite:
        return IMPOSSIBLE
    top = max(finite)
    if len(finite) == 1:
        return top
    total = math.fsum(base ** (s - top) for s in finite)
    return top + math.log(total, base)


def score_key(score) -> tuple[int, float]:
    """Sort key placing IMPOSSIBLE below every finite score."""
    if score is IMPOSSIBLE:
        return (0, 0.0)
    return (1, score)


@dataclass(frozen=True)
class LikelihoodModel:
    """P(observation | relation) table.

    Keys are ``(relation, observation)`` pairs.  Lookups of absent pairs raise
    :class:`ConfigurationError`; there are no silent defaults.
    """

    entries: Mapping[tuple[Hashable, Hashable], float]

    def __post_init__(self):
        for key, prob in self.entries.items():
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"likelihood {key!r} = {prob!r} is not in [0, 1]")

    def prob(self, relation, observation) -> float:
        try:
            return self.entries[(relation, observation)]
        except KeyError:
            raise ConfigurationError(
                f"likelihood model has no entry for relation={relation!r}, "
                f"observation={observation!r}"
            ) from None


@dataclass
class LogPosterior:
    """Unnormalized log scores keyed by hypothesis id (insertion ordered)."""

    scores: dict = field(default_factory=dict)

    @classmethod
    def uniform(cls, hypotheses: Sequence[Hashable]) -> "LogPosterior":
        if not hypotheses:
            return cls({})
        prior = -math.log(len(hypotheses))
        return cls({h: prior for h in hypotheses})

    @classmethod
    def from_probabilities(cls, probs: Mapping) -> "LogPosterior":
        return cls({h: ext_log(float(p)) for h, p in probs.items()})

    def __getitem__(self, h):
        return self.scores[h]

    def __len__(self) -> int:
        return len(self.scores)


# An observation paired with the hypothesis -> relation map that applies to it.
Evidence = tuple[Hashable, Callable[[Hashable], Hashable]]


def posterior_update(
    prior: LogPosterior,
    model: LikelihoodModel,
    observation,
    relation_of: Callable[[Hashable], Hashable],
) -> LogPosterior:
    """One application of Bayes' rule, with the previous posterior as prior."""
    out = {}
    for h, score in prior.scores.items():
        lik = model.prob(relation_of(h), observation)
        out[h] = log_mul(score, ext_log(lik))
    return LogPosterior(out)


def batch_update(
    prior: LogPosterior, model: LikelihoodModel, observations: Sequence[Evidence]
) -> LogPosterior:
    """Fold :func:`posterior_update` over ``observations``.

    Log terms are accumulated per hypothesis and summed with ``math.fsum``,
    which is correctly rounded, so the result does not depend on the order of
    the observations.
    """
    terms: dict = {h: [s] for h, s in prior.scores.items()}
    dead = {h for h, s in prior.scores.items() if s is IMPOSSIBLE}
    for observation, relation_of in observations:
        for h in terms:
            lik = model.prob(relation_of(h), observation)
            if lik == 0:
                dead.add(h)
            elif h not in dead:
                terms[h].append(math.log(lik))
    return LogPosterior(
        {h: IMPOSSIBLE if h in dead else math.fsum(ts) for h, ts in terms.items()}
    )


def normalize(posterior: LogPosterior) -> dict:
    """Exponentiate and normalize; raises :class:`AllImpossibleError`."""
    total = log_sum(posterior.scores.values())
    if total is IMPOSSIBLE:
        raise AllImpossibleError("every hypothesis has probability zero")
    return {
        h: 0.0 if s is IMPOSSIBLE else math.exp(s - total)
        for h, s in posterior.scores.items()
    }


def brute_force_posterior(
    model: LikelihoodModel, prior: Mapping, observations: Sequence[Evidence]
) -> dict:
    """Direct linear-domain Bayes rule; the test oracle for everything else.

    Arithmetic is generic, so passing ``fractions.Fraction`` priors and model
    entries gives exact results.
    """
    if len(prior) > 1000:
        raise ValueError("brute force is limited to 1000 hypotheses")
    joint = {}
    for h, p in prior.items():
        value = p
        for observation, relation_of in observations:
            value = value * model.prob(relation_of(h), observation)
        joint[h] = value
    total = sum(joint.values())
    if total == 0:
        raise AllImpossibleError("every hypothesis has probability zero")
    return {h: v / total for h, v in joint.items()}


def log_marginalize(
    posterior: LogPosterior, grouping: Callable[[Hashable], Hashable], base: float = math.e
) -> LogPosterior:
    """Sum member probabilities per group, in the log domain."""
    groups: dict = {}
    for h, s in posterior.scores.items():
        groups.setdefault(grouping(h), []).append(s)
    return LogPosterior({g: log_sum(ss, base) for g, ss in groups.items()})
