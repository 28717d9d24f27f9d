"""Command-line interface.

Every subcommand writes deterministic output (JSON, CSV or plain text) to
stdout or to ``--output``.  Wall-clock timings go to stderr only, so two runs
with the same flags produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .checks import CHECKS, run_check
from .corpus import CorpusKnobs, generate_corpus
from .experiment import ExperimentConfig, run_experiment
from .minilang.lexer import MiniSyntaxError
from .minilang.testing import ManifestError
from .patches import MODES, TEMPLATES
from .pipeline import Project, ProjectError, RepairConfig, Validator, analyze, run_baseline, run_repair, trace_project
from .sbfl import FORMULAE, CoverageError, ParameterError, load_coverage, sbfl_ranking
from .tracer import events_to_jsonl, spectra_to_csv

REPORT_FIELDS = """\
RepairReport fields (JSON; see schemas/report.schema.json):
  project, candidates, locations   project name, candidate and location counts
  note                             "no candidates", "no plausible patch" or null
  ratio                            BAPP first-plausible rank / baseline rank
  unranked_locations               selected locations with no surviving score
  audit                            {discarded, discarded_plausible} with --audit
  results[]                        one per strategy:
    strategy, alpha                "baseline" or a mode; alpha is null for baseline
    first_plausible_rank/_id       1-based validation position of the first plausible patch
    validations                    patches validated (stops at the first plausible)
    correct                        whether the plausible patch restores the known fix
    ground_truth_rank, acc_at_k    FL rank of the true location and acc@{1,3,5,10}
    budget                         trace steps, tests traced, discarded/survivor counts
    order                          [[patch id, base-2 score | "impossible" | null], ...]
    fl_ranking                     [{id, score, rank}] location ranking (max-rank ties)
"""


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _alphas(text: str) -> tuple:
    try:
        values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("alphas must be positive")
    return values


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _repair_args(p: argparse.ArgumentParser, tracing: bool = True) -> None:
    p.add_argument("project", help="project directory (src/*.mini, tests/manifest[, truth.json])")
    p.add_argument("--top-locations", type=_positive_int, default=200, help="SBFL locations to patch (default 200)")
    p.add_argument("--max-steps-per-test", type=_positive_int, default=50_000, help="interpreter steps per test run")
    if tracing:
        p.add_argument("--alpha", type=_positive_float, default=3.0, help="weight of dynamic evidence (default 3)")
        p.add_argument("--hit-limit", type=_positive_int, default=100, help="probe hits kept per location (last N)")
        p.add_argument("--step-budget", type=_positive_int, default=20_000_000, help="total tracing steps")
    p.add_argument("--output", "-o", help="write to this file instead of stdout")


def _config(args, **extra) -> RepairConfig:
    kw = {"top_locations": args.top_locations, "max_steps_per_test": args.max_steps_per_test}
    for name in ("alpha", "hit_limit", "step_budget", "mode", "max_validations", "jobs", "audit"):
        if hasattr(args, name):
            kw[name] = getattr(args, name)
    kw.update(extra)
    return RepairConfig(**kw)


def cmd_fl(args) -> int:
    matrix = load_coverage(args.coverage)
    if args.formula == "bayes" and args.p is None:
        raise ParameterError("--formula bayes needs --p")
    ranking = sbfl_ranking(matrix, args.formula, args.p)
    _emit(ranking.to_csv() if args.out == "csv" else ranking.to_json() + "\n", args.output)
    return 0


def cmd_derive(args) -> int:
    result = run_check(args.check, args.trials, args.seed)
    lines = [f"{args.check}: {result.summary()}"]
    for ce in result.counterexamples:
        lines.append("counterexample:")
        lines.append(ce.rstrip())
    _emit("\n".join(lines) + "\n", args.output)
    return 0 if result.ok else 1


def cmd_patches(args) -> int:
    project = Project.load(args.project)
    analysis = analyze(project, _config(args))
    rows = []
    for c in analysis.candidates:
        d = c.to_dict()
        prior = analysis.priors[c.id]
        d["prior"] = {"p_l": prior.p_l, "p_a_given_l": str(prior.p_a_given_l)}
        rows.append(d)
    _emit(json.dumps(rows, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def cmd_trace(args) -> int:
    project = Project.load(args.project)
    config = _config(args)
    analysis = analyze(project, config)
    state = trace_project(analysis, config)
    _emit(spectra_to_csv(analysis.candidates, state.spectra), args.output)
    if args.events:
        Path(args.events).write_text(events_to_jsonl(state.events), encoding="utf-8")
    return 0


def cmd_repair(args) -> int:
    project = Project.load(args.project)
    config = _config(args)
    analysis = analyze(project, config)
    validator = Validator(analysis, config.limits)
    report = run_repair(project, config, analysis, validator)
    if args.with_baseline:
        report.results.insert(0, run_baseline(project, config, analysis, validator).results[0])
    _emit(report.to_json(), args.output)
    return 0


def cmd_baseline(args) -> int:
    project = Project.load(args.project)
    _emit(run_baseline(project, _config(args)).to_json(), args.output)
    return 0


def cmd_bench(args) -> int:
    knobs = CorpusKnobs(
        templates=tuple(args.templates),
        max_fail_fraction=args.max_fail_fraction,
        top_locations=args.top_locations,
    )
    corpus = generate_corpus(args.seed, args.count, knobs)
    if args.save_corpus:
        for bug in corpus:
            bug.save(Path(args.save_corpus) / bug.name)
    repair = RepairConfig(
        top_locations=args.top_locations,
        hit_limit=args.hit_limit,
        step_budget=args.step_budget,
        max_steps_per_test=args.max_steps_per_test,
        jobs=args.jobs,
    )
    config = ExperimentConfig(
        alphas=args.alpha_sweep, modes=tuple(args.modes), main_alpha=args.alpha, repair=repair, audit=args.audit
    )
    experiment = run_experiment(corpus, config)
    if args.out_dir:
        experiment.write(args.out_dir)
    summary = experiment.to_dict()["summary"]
    summary["corpus"] = {"seed": args.seed, "count": args.count}
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    _emit(text, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayesdebug",
        description="Bayesian fault localization and value-aware patch prioritization for a small language.",
        epilog=REPORT_FIELDS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fl", help="rank elements of a coverage matrix")
    p.add_argument("coverage", help="coverage file ('tests N elements M' header, one row per test)")
    p.add_argument("--formula", choices=FORMULAE, default="ochiai")
    p.add_argument("--p", type=float, help="fault-detection probability for --formula bayes")
    p.add_argument("--tie", choices=("max-rank",), default="max-rank")
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_fl)

    p = sub.add_parser("derive", help="run a formula-equivalence property check")
    p.add_argument("--check", choices=CHECKS, required=True)
    p.add_argument("--trials", type=_positive_int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("patches", help="list candidate patches with priors (JSON)")
    _repair_args(p, tracing=False)
    p.set_defaults(func=cmd_patches)

    p = sub.add_parser("trace", help="change spectra (CSV) and probe events (JSON lines)")
    _repair_args(p)
    p.add_argument("--events", help="write TraceEvent log (JSON lines) here")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("repair", help="full pipeline; RepairReport JSON", epilog=REPORT_FIELDS,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    _repair_args(p)
    p.add_argument("--mode", choices=MODES, default="multiply")
    p.add_argument("--max-validations", type=_positive_int)
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel validation workers")
    p.add_argument("--audit", action="store_true", help="also validate every discarded candidate")
    p.add_argument("--with-baseline", action="store_true", help="include the generation-order run")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("baseline", help="validate in generation order; RepairReport JSON")
    _repair_args(p, tracing=False)
    p.add_argument("--max-validations", type=_positive_int)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("bench", help="seeded corpus plus experiment tables")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=_positive_int, default=30)
    p.add_argument("--alpha-sweep", type=_alphas, default=(0.3, 1.0, 3.0, 10.0))
    p.add_argument("--alpha", type=_positive_float, default=3.0, help="alpha for the strategy ablation")
    p.add_argument("--modes", nargs="+", choices=MODES, default=list(MODES))
    p.add_argument("--templates", nargs="+", choices=TEMPLATES, default=list(TEMPLATES),
                   help="templates allowed to seed bugs")
    p.add_argument("--max-fail-fraction", type=float, default=1.0)
    p.add_argument("--top-locations", type=_positive_int, default=200)
    p.add_argument("--hit-limit", type=_positive_int, default=100)
    p.add_argument("--step-budget", type=_positive_int, default=20_000_000)
    p.add_argument("--max-steps-per-test", type=_positive_int, default=50_000)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--audit", action="store_true")
    p.add_argument("--out-dir", help="write report.json and tables/*.csv here")
    p.add_argument("--save-corpus", help="write each seeded bug as a project directory here")
    p.add_argument("--output", "-o", help="write the summary JSON here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        code = args.func(args)
    except (ProjectError, CoverageError, ParameterError, ManifestError, MiniSyntaxError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wall time: {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
