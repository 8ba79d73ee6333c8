"""ERT per initial solution on Trap, with and without noise (n = 3, 4, 5).

Writes one CSV per (n, noise) under --outdir and prints the per-label z-score
of the noisy-minus-noiseless difference.
"""

import argparse
import dataclasses
import math
from pathlib import Path

from noisyea.ea import AlgoConfig, EvalPolicy
from noisyea.lab import ExperimentConfig, emit_csv, ert_sweep
from noisyea.noise import NoiseModel
from noisyea.problems import ProblemSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="3,4,5")
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--policy", default="single", choices=["single", "reeval"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", default="results/trap_ert")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    for n in (int(v) for v in args.sizes.split(",")):
        algo = AlgoConfig(p=1 / n, policy=EvalPolicy(args.policy))
        base = ExperimentConfig(ProblemSpec.trap(n), algo, NoiseModel(), args.runs, 10**7, args.seed)
        plain = ert_sweep(base)
        emit_csv(plain, out / f"trap{n}_none.csv")
        for name, model in (("additive", NoiseModel.additive(-n, n)),
                            ("multiplicative", NoiseModel.multiplicative(0.1, 10.0))):
            noisy = ert_sweep(dataclasses.replace(base, model=model, master_seed=args.seed + 1))
            emit_csv(noisy, out / f"trap{n}_{name}.csv")
            z = [(a.mean_evaluations_paper - b.mean_evaluations_paper) / math.hypot(a.std_error, b.std_error)
                 for a, b in zip(noisy.rows, plain.rows) if b.std_error > 0]
            print(f"n={n} {name:>14}: max z = {max(z):+.2f}, min z = {min(z):+.2f}")


if __name__ == "__main__":
    main()
