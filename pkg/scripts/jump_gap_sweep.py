"""Mean ERT gap on Jump_{m,5} for m = 1..5 under three noise settings."""

import argparse
import dataclasses
from pathlib import Path

from noisyea.ea import AlgoConfig, EvalPolicy
from noisyea.lab import ExperimentConfig, emit_csv, ert_sweep, gap_from_reports, mean_gap
from noisyea.noise import NoiseModel
from noisyea.problems import ProblemSpec

N = 5
MODELS = {
    "additive": NoiseModel.additive(-0.5 * N, 0.5 * N),
    "multiplicative": NoiseModel.multiplicative(1.0, 2.0),
    "one_bit": NoiseModel.one_bit(0.5),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--policy", default="single", choices=["single", "reeval"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--outdir", default="results/jump_gap")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    algo = AlgoConfig(p=1 / N, policy=EvalPolicy(args.policy))
    plain = {}
    for m in range(1, N + 1):
        cfg = ExperimentConfig(ProblemSpec.jump(N, m), algo, NoiseModel(), args.runs, 10**7, args.seed + m)
        plain[m] = (cfg, ert_sweep(cfg))
    for k, (name, model) in enumerate(MODELS.items()):
        line = []
        for m in range(1, N + 1):
            cfg, base = plain[m]
            noisy = ert_sweep(dataclasses.replace(cfg, model=model, master_seed=args.seed + 100 * (k + 1) + m))
            rep = gap_from_reports(noisy, base)
            emit_csv(rep, out / f"jump{m}_{name}_gap.csv")
            g, se = mean_gap(rep)
            line.append(f"m={m}: {g:+.3f} ({se:.3f})")
        print(f"{name:>14}  " + "  ".join(line))


if __name__ == "__main__":
    main()
