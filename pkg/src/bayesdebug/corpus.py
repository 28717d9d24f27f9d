"""Seeded-bug corpus built from the bundled subject programs.

Each bug is one template edit applied to a correct subject.  The edit is
either a generator candidate on the correct program or the removal of an
existing null or cast guard.  A mutation is kept only when

* at least one test fails on the mutated program, and
* the generator, run on the mutated program, offers a candidate whose edit
  restores the correct program exactly (the inverse edit).

Test expectations come from running the correct program, so every subject
suite passes before seeding.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .minilang import ast as A
from .minilang.edits import apply_edit, node_text
from .minilang.parser import parse_program
from .minilang.render import render_program
from .minilang.testing import TestCase, run_suite, run_test
from .minilang.values import render_value
from .patches import TEMPLATES
from .pipeline import GroundTruth, Project, ProjectError, RepairConfig, analyze
from .templates import generate_at


@dataclass(frozen=True)
class CorpusKnobs:
    """Difficulty knobs for corpus generation."""

    templates: tuple = TEMPLATES  # templates whose edits may seed a bug
    subjects: tuple | None = None  # subject names; None means all
    max_fail_fraction: float = 1.0  # reject bugs failing more of the suite than this
    max_attempts: int = 5000
    top_locations: int = 200


def subject_names() -> list:
    root = resources.files(__package__) / "subjects"
    return sorted(p.name[: -len(".mini")] for p in root.iterdir() if p.name.endswith(".mini"))


def load_subject(name: str) -> Project:
    """A correct subject with expectations taken from its own behavior."""
    root = resources.files(__package__) / "subjects"
    source = (root / f"{name}.mini").read_text(encoding="utf-8")
    files = render_program(parse_program({f"{name}.mini": source}))
    program = parse_program(files)
    calls = [c.strip() for c in (root / f"{name}.calls").read_text(encoding="utf-8").splitlines()]
    tests = []
    for i, call in enumerate(c for c in calls if c and not c.startswith("#")):
        probe = TestCase.from_text(f"t{i + 1:02d}", call)
        run = run_test(program, probe)
        if not run.passed:
            raise ProjectError(f"subject {name}: {call} faults on the correct program: {run.fault}")
        tests.append(TestCase.from_text(probe.id, call, [["result", render_value(run.result)]]))
    return Project(name, files, tests)


@dataclass(frozen=True)
class Mutation:
    template: str  # template of the fix that undoes it
    edit: dict


def _guard_kind(stmt: A.Stmt) -> str | None:
    if not isinstance(stmt, A.If) or stmt.orelse is not None or len(stmt.then.stmts) != 1:
        return None
    if not isinstance(stmt.then.stmts[0], A.Return):
        return None
    c = stmt.cond
    if isinstance(c, A.Binary) and c.op == "==" and isinstance(c.left, A.Name) and isinstance(c.right, A.NullLit):
        return "NullChecker"
    if (
        isinstance(c, A.Unary)
        and c.op == "!"
        and isinstance(c.operand, A.Call)
        and c.operand.func == "isnum"
        and isinstance(c.operand.args[0], A.Name)
    ):
        return "CastChecker"
    return None


def mutations(program: A.Program, templates: Sequence[str] = TEMPLATES) -> list:
    """Candidate seeding edits, in deterministic order."""
    out = []
    for stmt in program.statements():
        kind = _guard_kind(stmt)
        if kind in templates:
            out.append(Mutation(kind, {"op": "remove_stmt", "node": stmt.nid, "old": node_text(stmt)}))
    locations = list(program.locations())
    for c in generate_at(program, locations):
        if c.template in templates:
            out.append(Mutation(c.template, c.edit))
    return out


def seed_bug(subject: Project, mutation: Mutation, knobs: CorpusKnobs, name: str) -> Project | None:
    """The buggy project for one mutation, or None when it is rejected."""
    correct = subject.program
    mutated = parse_program(render_program(apply_edit(correct, mutation.edit)))
    if mutated == correct:
        return None
    suite = run_suite(mutated, subject.tests)
    failing = suite.failing
    if not failing or len(failing) > knobs.max_fail_fraction * len(subject.tests):
        return None
    tests = [t.with_label(suite.runs[t.id].verdict) for t in subject.tests]
    project = Project(name, render_program(mutated), tests)
    analysis = analyze(project, RepairConfig(top_locations=knobs.top_locations))
    for cand in analysis.candidates:
        if apply_edit(analysis.program, cand.edit) == correct:
            project.truth = GroundTruth(
                (cand.location,), cand.template, cand.edit, dict(subject.files), mutation.edit
            )
            return project
    return None


def generate_corpus(seed: int, count: int, knobs: CorpusKnobs | None = None) -> list:
    """``count`` seeded bugs; the same seed always yields the same corpus."""
    if count < 1:
        raise ValueError("count must be >= 1")
    knobs = knobs or CorpusKnobs()
    names = list(knobs.subjects or subject_names())
    subjects = {n: load_subject(n) for n in names}
    pools = {}
    for n in names:
        by_template: dict = {}
        for m in mutations(subjects[n].program, knobs.templates):
            by_template.setdefault(m.template, []).append(m)
        pools[n] = by_template
    rng = random.Random(seed)
    for n in names:
        for template in sorted(pools[n]):
            rng.shuffle(pools[n][template])
    corpus, seen, attempts = [], set(), 0
    turn = 0
    while len(corpus) < count:
        live = [n for n in names if any(pools[n].values())]
        if not live or attempts >= knobs.max_attempts:
            raise ProjectError(f"could only seed {len(corpus)} of {count} bugs after {attempts} attempts")
        # round-robin over subjects, then a random template, then a random edit
        n = live[turn % len(live)]
        turn += 1
        template = rng.choice(sorted(t for t, ms in pools[n].items() if ms))
        mutation = pools[n][template].pop()
        attempts += 1
        bug = seed_bug(subjects[n], mutation, knobs, f"bug{len(corpus) + 1:03d}-{n}")
        if bug is None:
            continue
        key = tuple(sorted(bug.files.items()))
        if key in seen:
            continue
        seen.add(key)
        corpus.append(bug)
    return corpus
