"""Corpus experiments: rank ratios, FL accuracy, alpha sweep, strategy ablation.

Each bug is analyzed once and validated through one memoized validator.
Tracing depends on alpha only (through the passing-test priority), so one
trace per alpha is shared by every mode.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .patches import MODES
from .pipeline import ACC_KS, Project, RepairConfig, Validator, analyze, run_baseline, run_repair, trace_project


@dataclass(frozen=True)
class ExperimentConfig:
    alphas: tuple = (0.3, 1.0, 3.0, 10.0)  # multiply-mode sweep
    modes: tuple = MODES  # compared at main_alpha
    main_alpha: float = 3.0
    repair: RepairConfig = field(default_factory=RepairConfig)
    audit: bool = False

    def __post_init__(self):
        if not self.alphas or any(a <= 0 for a in self.alphas):
            raise ValueError("alphas must be a non-empty list of positive numbers")
        unknown = set(self.modes) - set(MODES)
        if unknown:
            raise ValueError(f"unknown modes {sorted(unknown)}")

    def runs(self) -> list:
        """(mode, alpha) pairs, each once, sweep first."""
        pairs = [("multiply", a) for a in self.alphas]
        pairs += [(m, self.main_alpha) for m in self.modes]
        return list(dict.fromkeys(pairs))


def run_key(mode: str, alpha: float) -> str:
    return f"{mode}@{alpha:g}"


@dataclass
class BugResult:
    bug: str
    template: str | None
    candidates: int
    locations: int
    baseline_rank: int | None
    baseline_validations: int
    ochiai_gt_rank: int | None
    ochiai_acc: dict
    ranks: dict = field(default_factory=dict)  # run key -> first-plausible rank
    validations: dict = field(default_factory=dict)
    correct: dict = field(default_factory=dict)
    gt_ranks: dict = field(default_factory=dict)  # alpha -> marginal-FL rank of the true location
    acc: dict = field(default_factory=dict)  # alpha -> {k: 0/1}
    discarded: int = 0
    discarded_plausible: list = field(default_factory=list)

    def ratio(self, key: str) -> float | None:
        rank = self.ranks.get(key)
        if rank is None or self.baseline_rank is None:
            return None
        return rank / self.baseline_rank


def evaluate_bug(project: Project, config: ExperimentConfig) -> BugResult:
    base_cfg = config.repair
    analysis = analyze(project, base_cfg)
    validator = Validator(analysis, base_cfg.limits)
    base = run_baseline(project, base_cfg, analysis, validator).results[0]
    truth = project.truth
    row = BugResult(
        project.name,
        truth.template if truth else None,
        len(analysis.candidates),
        len(analysis.locations),
        base.first_plausible_rank,
        base.validations,
        base.ground_truth_rank,
        dict(base.acc_at_k),
    )
    states = {}
    for mode, alpha in config.runs():
        cfg = replace(base_cfg, mode=mode, alpha=alpha, audit=False)
        if alpha not in states and analysis.candidates:
            states[alpha] = trace_project(analysis, cfg)
        audit = config.audit and mode == "multiply" and alpha == config.main_alpha
        cfg = replace(cfg, audit=audit)
        res = run_repair(project, cfg, analysis, validator, states.get(alpha))
        r = res.results[0]
        key = run_key(mode, alpha)
        row.ranks[key] = r.first_plausible_rank
        row.validations[key] = r.validations
        row.correct[key] = r.correct
        row.gt_ranks[alpha] = r.ground_truth_rank
        row.acc[alpha] = dict(r.acc_at_k)
        if res.audit is not None:
            row.discarded = res.audit["discarded"]
            row.discarded_plausible = res.audit["discarded_plausible"]
    return row


def _median(values: Sequence) -> float | None:
    vals = [v for v in values if v is not None]
    return statistics.median(vals) if vals else None


def _wins(rows: Sequence[BugResult], key: str) -> float | None:
    pairs = [(r.ranks.get(key), r.baseline_rank) for r in rows]
    pairs = [(a, b) for a, b in pairs if a is not None and b is not None]
    return sum(a <= b for a, b in pairs) / len(pairs) if pairs else None


@dataclass
class Experiment:
    config: ExperimentConfig
    bugs: list

    def summary(self, mode: str, alpha: float) -> dict:
        key = run_key(mode, alpha)
        ratios = [b.ratio(key) for b in self.bugs]
        return {
            "mode": mode,
            "alpha": alpha,
            "median_ratio": _median(ratios),
            "wins": _wins(self.bugs, key),
            "solved": sum(b.ranks.get(key) is not None for b in self.bugs),
            "validations": sum(b.validations.get(key, 0) for b in self.bugs),
        }

    def fl_summary(self, alpha: float) -> dict:
        gt = [
            b.gt_ranks[alpha] / b.ochiai_gt_rank
            for b in self.bugs
            if b.gt_ranks.get(alpha) is not None and b.ochiai_gt_rank
        ]
        return {
            "alpha": alpha,
            "gt_rank_ratio_median": _median(gt),
            "acc": {
                str(k): {
                    "ochiai": sum(b.ochiai_acc.get(k, 0) for b in self.bugs),
                    "marginal": sum(b.acc.get(alpha, {}).get(k, 0) for b in self.bugs),
                }
                for k in ACC_KS
            },
        }

    @property
    def main(self) -> dict:
        return self.summary("multiply", self.config.main_alpha)

    def tables(self) -> dict:
        cfg = self.config
        runs = cfg.runs()
        per_bug = []
        for b in self.bugs:
            row = {
                "bug": b.bug,
                "template": b.template,
                "candidates": b.candidates,
                "baseline_rank": b.baseline_rank,
            }
            for mode, alpha in runs:
                key = run_key(mode, alpha)
                row[f"rank[{key}]"] = b.ranks.get(key)
                row[f"ratio[{key}]"] = b.ratio(key)
            row["ochiai_gt_rank"] = b.ochiai_gt_rank
            row["marginal_gt_rank"] = b.gt_ranks.get(cfg.main_alpha)
            row["discarded"] = b.discarded
            row["discarded_plausible"] = len(b.discarded_plausible)
            per_bug.append(row)
        main_fl = self.fl_summary(cfg.main_alpha)
        return {
            "per_bug": per_bug,
            "acc_at_k": [
                {"k": int(k), "ochiai": v["ochiai"], "marginal": v["marginal"]}
                for k, v in main_fl["acc"].items()
            ],
            "alpha_sweep": [
                {**self.summary("multiply", a), "gt_rank_ratio_median": self.fl_summary(a)["gt_rank_ratio_median"]}
                for a in cfg.alphas
            ],
            "strategy": [self.summary(m, cfg.main_alpha) for m in cfg.modes],
        }

    def to_dict(self) -> dict:
        cfg = self.config
        repair = asdict(cfg.repair)
        return {
            "config": {
                "alphas": list(cfg.alphas),
                "modes": list(cfg.modes),
                "main_alpha": cfg.main_alpha,
                "audit": cfg.audit,
                "repair": repair,
            },
            "corpus": [b.bug for b in self.bugs],
            "summary": {
                "main": self.main,
                "fl": self.fl_summary(cfg.main_alpha),
                "audit": {
                    "discarded": sum(b.discarded for b in self.bugs),
                    "discarded_plausible": sum(len(b.discarded_plausible) for b in self.bugs),
                }
                if cfg.audit
                else None,
            },
            "tables": self.tables(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> Path:
        """``report.json`` plus one CSV per table under ``tables/``."""
        out = Path(out_dir)
        (out / "tables").mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        for name, rows in self.tables().items():
            (out / "tables" / f"{name}.csv").write_text(table_csv(rows), encoding="utf-8")
        return out


def table_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if v is None else v for k, v in r.items()})
    return buf.getvalue()


def run_experiment(corpus: Sequence[Project], config: ExperimentConfig | None = None) -> Experiment:
    if not corpus:
        raise ValueError("corpus is empty")
    config = config or ExperimentConfig()
    return Experiment(config, [evaluate_bug(p, config) for p in corpus])


__all__ = ["BugResult", "Experiment", "ExperimentConfig", "evaluate_bug", "run_experiment", "run_key", "table_csv"]
