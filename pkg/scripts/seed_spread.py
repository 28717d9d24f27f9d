"""Strategy medians and win rates across several corpus seeds.

Shows how much the headline numbers move with the corpus draw.
Usage: python3 scripts/seed_spread.py 1 2 3 4 5
"""

import sys

from bayesdebug.corpus import generate_corpus
from bayesdebug.experiment import ExperimentConfig, run_experiment
from bayesdebug.patches import MODES


def main(seeds) -> None:
    config = ExperimentConfig(alphas=(3.0,))
    print("seed  " + "  ".join(f"{m:>22}" for m in MODES) + "  acc@5 (ochiai/marginal)")
    for seed in seeds:
        exp = run_experiment(generate_corpus(seed, 30), config)
        cells = []
        for mode in MODES:
            s = exp.summary(mode, 3.0)
            cells.append(f"{s['median_ratio']:.3f} / {s['wins']:.2f} / {s['validations']:>4}")
        acc = exp.fl_summary(3.0)["acc"]["5"]
        print(f"{seed:>4}  " + "  ".join(f"{c:>22}" for c in cells) + f"  {acc['ochiai']}/{acc['marginal']}", flush=True)


if __name__ == "__main__":
    main([int(s) for s in sys.argv[1:]] or [1, 2, 3, 4, 5])
