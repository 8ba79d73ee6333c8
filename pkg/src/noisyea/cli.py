"""Command line entry point: ``noisyea <subcommand> ...``.

Exit codes: 0 success, 2 configuration error, 3 failed consistency check.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from . import chain as ch
from .ea import EvalPolicy
from .lab import (
    ExperimentConfig, cover_time_path, emit_csv, ert_sweep, gap_sweep, pnt_scan,
)
from .noise import NoiseKind, NoiseModel
from .problems import Family

EXIT_CONFIG = 2
EXIT_CHECK = 3


class ConfigError(Exception):
    pass


def load_config(path: str, seed: int | None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=seed)
    return cfg


def build_chains(cfg: ExperimentConfig) -> tuple[ch.LumpedChain, ch.LumpedChain]:
    """(noisy chain, noiseless chain) for the configured algorithm."""
    spec, algo, model = cfg.spec, cfg.algo, cfg.model
    noiseless = ch.noiseless_chain(spec, algo.lam, algo.p)
    if model.kind is NoiseKind.NONE:
        return noiseless, noiseless
    if algo.policy is EvalPolicy.SINGLE and model.kind is NoiseKind.ONE_BIT and spec.family is Family.ONEMAX:
        return ch.noisy_chain_singleeval(spec, model.pn, algo.p), noiseless
    return ch.noisy_chain_reeval(spec, model, algo.rule, algo.p, algo.lam), noiseless


def _out(path):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_ert(args) -> int:
    cfg = load_config(args.config, args.seed)
    path = emit_csv(ert_sweep(cfg), args.out)
    print(f"wrote {path}")
    return 0


def cmd_gap(args) -> int:
    cfg = load_config(args.config, args.seed)
    base = load_config(args.baseline, args.seed) if args.baseline else dataclasses.replace(cfg, model=NoiseModel())
    path = emit_csv(gap_sweep(cfg, base), args.out)
    print(f"wrote {path}")
    return 0


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def cmd_pnt(args) -> int:
    cfg = load_config(args.config, args.seed)
    report = pnt_scan(cfg.spec, cfg.algo, _floats(args.levels), [int(v) for v in _floats(args.sizes)],
                      args.runs or cfg.runs_per_point, args.budget or cfg.budget, cfg.master_seed,
                      kind=NoiseKind(args.noise))
    path = emit_csv(report, args.out)
    print(f"wrote {path}")
    return 0


def cmd_cover(args) -> int:
    start = args.start if args.start == "uniform" else int(args.start)
    res = cover_time_path(args.vertices, args.walks, args.seed or 0, start)
    print(f"vertices={res.vertices} walks={res.walks} mean={res.mean:.6g} "
          f"se={res.std_error:.3g} bound={res.bound} within_bound={res.within_bound}")
    return 0


def cmd_chain_efht(args) -> int:
    cfg = load_config(args.config, args.seed)
    noisy, _ = build_chains(cfg)
    E = ch.efht_solve(noisy)
    fh = _out(args.out)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["state", "efht"])
    for s, v in zip(E.states, E.values):
        w.writerow([s if not isinstance(s, tuple) else ":".join(map(str, s)), repr(float(v))])
    if args.out:
        fh.close()
    return 0


def cmd_dominance(args) -> int:
    cfg = load_config(args.config, args.seed)
    noisy, noiseless = build_chains(cfg)
    if noisy.states != noiseless.states:
        raise ConfigError("dominance needs a re-evaluation (ones-count) chain")
    E0 = ch.efht_solve(noiseless)
    res = ch.dominance_check(noisy, noiseless, ch.efht_partition(E0))
    print(f"verdict: {res.verdict.value}")
    if res.witness is not None:
        w = res.witness
        print(f"witness: state={w.state} i={w.i} noisy={w.noisy_cumulative!r} noiseless={w.noiseless_cumulative!r}")
    E1 = ch.efht_solve(noisy)
    tol = 1e-9 * np.maximum(1.0, E0.values)
    consistent = True
    if res.verdict in (ch.Verdict.EASIER, ch.Verdict.BOTH):
        consistent &= bool(np.all(E1.values <= E0.values + tol))
    if res.verdict in (ch.Verdict.HARDER, ch.Verdict.BOTH):
        consistent &= bool(np.all(E1.values >= E0.values - tol))
    print(f"efht consistent with verdict: {consistent}")
    return 0 if consistent else EXIT_CHECK


def cmd_lemma4(args) -> int:
    rng = np.random.default_rng(args.seed or 0)
    bad = 0
    for _ in range(args.instances):
        P, Q, E = ch.random_lemma4_instance(rng, args.max_m)
        bad += not ch.lemma4_oracle(P, Q, E)
    print(f"instances={args.instances} violations={bad}")
    return 0 if bad == 0 else EXIT_CHECK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noisyea", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, config=True, out=True):
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        p.add_argument("--seed", type=int, default=None)
        if config:
            p.add_argument("--config", required=True)
        if out:
            p.add_argument("--out", default=None)
        return p

    add("ert", cmd_ert).set_defaults(out_required=True)
    p = add("gap", cmd_gap)
    p.add_argument("--baseline", default=None, help="noiseless config; defaults to --config without noise")
    p = add("pnt-scan", cmd_pnt)
    p.add_argument("--levels", required=True)
    p.add_argument("--sizes", required=True)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--noise", default="one_bit", choices=[k.value for k in NoiseKind if k is not NoiseKind.NONE])
    p = add("cover-time", cmd_cover, config=False, out=False)
    p.add_argument("--vertices", type=int, required=True)
    p.add_argument("--walks", type=int, default=100_000)
    p.add_argument("--start", default="uniform")
    add("chain-efht", cmd_chain_efht)
    add("check-dominance", cmd_dominance, out=False)
    p = add("lemma4-fuzz", cmd_lemma4, config=False, out=False)
    p.add_argument("--instances", type=int, default=100_000)
    p.add_argument("--max-m", type=int, default=20)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command in ("ert", "gap", "pnt-scan") and not args.out:
        print(f"error: {args.command} needs --out", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
