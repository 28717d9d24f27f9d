"""Run the seeded-corpus experiment and write report.json plus CSV tables.

Usage: python3 scripts/run_bench.py [--seed 1] [--count 30] [--out results/seed1]
"""

import argparse
import json
import time

from bayesdebug.corpus import generate_corpus
from bayesdebug.experiment import ExperimentConfig, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--count", type=int, default=30)
    ap.add_argument("--out", default="results/seed1")
    ap.add_argument("--no-audit", action="store_true")
    args = ap.parse_args()
    start = time.perf_counter()
    corpus = generate_corpus(args.seed, args.count)
    experiment = run_experiment(corpus, ExperimentConfig(audit=not args.no_audit))
    out = experiment.write(args.out)
    print(json.dumps(experiment.to_dict()["summary"], indent=2, sort_keys=True))
    for row in experiment.tables()["strategy"]:
        print(f"{row['mode']:>10}  median {row['median_ratio']:.3f}  wins {row['wins']:.3f}  validations {row['validations']}")
    print(f"wrote {out} in {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
