"""Monte Carlo experiments: ERT sweeps, noise gaps, noise-level scans, cover times."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ea import AlgoConfig, RunRecord, run, run_from
from .noise import NoiseKind, NoiseModel
from .problems import BitString, ProblemSpec

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10_000_000
SWEEP_WARN_RUNS = 2**20


def derive_seed(master_seed: int, *key: int) -> int:
    """Independent 64-bit run seed for ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ProblemSpec
    algo: AlgoConfig
    model: NoiseModel = NoiseModel()
    runs_per_point: int = 1000
    budget: int = DEFAULT_BUDGET
    master_seed: int = 0
    initial: str | int = "sweep"  # "uniform", "sweep", or a fixed integer label

    def __post_init__(self):
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be at least 1")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if isinstance(self.initial, str) and self.initial not in ("uniform", "sweep"):
            raise ValueError(f"unknown initial mode {self.initial!r}")
        if isinstance(self.initial, int) and not 0 <= self.initial < 2**self.spec.n:
            raise ValueError(f"initial label {self.initial} does not fit in n={self.spec.n} bits")

    def to_dict(self) -> dict:
        return {
            "problem": self.spec.to_dict(),
            "algo": self.algo.to_dict(),
            "noise": self.model.to_dict(),
            "runs_per_point": self.runs_per_point,
            "budget": self.budget,
            "master_seed": self.master_seed,
            "initial": self.initial,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        initial = d.get("initial", "sweep")
        return cls(
            spec=ProblemSpec.from_dict(d["problem"]),
            algo=AlgoConfig.from_dict(d["algo"]),
            model=NoiseModel.from_dict(d.get("noise", {"noise": "none"})),
            runs_per_point=int(d.get("runs_per_point", 1000)),
            budget=int(d.get("budget", DEFAULT_BUDGET)),
            master_seed=int(d.get("master_seed", 0)),
            initial=initial if isinstance(initial, str) else int(initial),
        )


# -- reports ------------------------------------------------------------------

@dataclass(frozen=True)
class ErtRow:
    initial_label: str
    mean_evaluations_paper: float
    std_error: float
    success_rate: float
    runs: int
    censored_count: int

    @property
    def is_lower_bound(self) -> bool:
        return self.censored_count > 0


@dataclass(frozen=True)
class GapRow:
    initial_label: str
    gap: float
    std_error: float
    noisy_censored: int
    noiseless_censored: int

    @property
    def is_lower_bound(self) -> bool:
        return self.noisy_censored > 0

    @property
    def reliable(self) -> bool:
        return self.noisy_censored == 0 and self.noiseless_censored == 0


@dataclass(frozen=True)
class PntRow:
    n: int
    level: float
    mean_evals: float
    std_error: float
    success_rate: float
    runs: int
    censored_count: int


@dataclass
class Report:
    row_type: type
    rows: list = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        return [f.name for f in dataclasses.fields(self.row_type)]

    @property
    def censored(self) -> bool:
        return any(getattr(r, "is_lower_bound", False) or getattr(r, "censored_count", 0) for r in self.rows)

    def row(self, label) -> object:
        for r in self.rows:
            if r.initial_label == str(label):
                return r
        raise KeyError(label)


def summarize_runs(label, records: Sequence[RunRecord]) -> ErtRow:
    evals = np.array([r.evaluations_paper for r in records], dtype=float)
    k = len(evals)
    se = float(evals.std(ddof=1) / math.sqrt(k)) if k > 1 else float("nan")
    ok = sum(r.success for r in records)
    return ErtRow(str(label), float(evals.mean()), se, ok / k, k, k - ok)


def ert_sweep(cfg: ExperimentConfig) -> Report:
    """Mean evaluations (1 + lambda * iterations) per initial solution.

    Run ``r`` from initial label ``v`` uses the seed ``derive_seed(master, v, r)``;
    uniform starts use ``derive_seed(master, 2**n, r)``. Censored runs enter the
    mean at their budget-truncated cost, so such rows are lower bounds.
    """
    n = cfg.spec.n
    if cfg.initial == "uniform":
        labels = ["uniform"]
    elif cfg.initial == "sweep":
        labels = list(range(2**n))
        total = len(labels) * cfg.runs_per_point
        if total > SWEEP_WARN_RUNS:
            log.warning("sweep of %d runs requested", total)
    else:
        labels = [int(cfg.initial)]
    report = Report(ErtRow)
    for label in labels:
        records = []
        for r in range(cfg.runs_per_point):
            if label == "uniform":
                records.append(run(cfg.algo, cfg.spec, cfg.model, cfg.budget, derive_seed(cfg.master_seed, 2**n, r)))
            else:
                seed = derive_seed(cfg.master_seed, label, r)
                records.append(run_from(cfg.algo, cfg.spec, cfg.model, BitString.from_int(label, n), cfg.budget, seed))
        report.rows.append(summarize_runs(label, records))
    return report


def gap_from_reports(noisy: Report, noiseless: Report) -> Report:
    out = Report(GapRow)
    base = {r.initial_label: r for r in noiseless.rows}
    for a in noisy.rows:
        b = base[a.initial_label]
        gap = (a.mean_evaluations_paper - b.mean_evaluations_paper) / b.mean_evaluations_paper
        ratio = a.mean_evaluations_paper / b.mean_evaluations_paper
        # delta method on a ratio of independent means
        se = math.sqrt(a.std_error**2 + (ratio * b.std_error) ** 2) / b.mean_evaluations_paper
        out.rows.append(GapRow(a.initial_label, gap, se, a.censored_count, b.censored_count))
    return out


def gap_sweep(cfg_noisy: ExperimentConfig, cfg_noiseless: ExperimentConfig) -> Report:
    """Relative slowdown ``(E_noisy - E_noiseless) / E_noiseless`` per initial solution."""
    if dataclasses.replace(cfg_noisy, model=cfg_noiseless.model) != cfg_noiseless:
        raise ValueError("gap configs may differ only in the noise model")
    return gap_from_reports(ert_sweep(cfg_noisy), ert_sweep(cfg_noiseless))


def mean_gap(report: Report) -> tuple[float, float]:
    """Average gap over initial solutions and its standard error."""
    g = np.array([r.gap for r in report.rows])
    se = np.array([r.std_error for r in report.rows])
    return float(g.mean()), float(math.sqrt(np.sum(se**2)) / len(g))


def model_at_level(kind: NoiseKind, level: float) -> NoiseModel:
    """One-bit: ``p_n = level``; additive: ``[-level, level]``; multiplicative: ``[1, 1 + level]``."""
    kind = NoiseKind(kind)
    if kind is NoiseKind.ONE_BIT:
        return NoiseModel.one_bit(level)
    if level == 0:
        return NoiseModel.noiseless()
    if kind is NoiseKind.ADDITIVE:
        return NoiseModel.additive(-level, level)
    if kind is NoiseKind.MULTIPLICATIVE:
        return NoiseModel.multiplicative(1.0, 1.0 + level)
    return NoiseModel.noiseless()


def pnt_scan(spec: ProblemSpec, algo: AlgoConfig, levels: Sequence[float], sizes: Sequence[int],
             runs: int, budget: int, seed: int, kind: NoiseKind = NoiseKind.ONE_BIT,
             p_one_over_n: bool = True) -> Report:
    """Grid of censored mean cost (actual evaluations) and success-within-budget rate.

    With ``p_one_over_n`` the mutation probability follows ``1/n`` at each size.
    """
    report = Report(PntRow)
    for n in sizes:
        s = dataclasses.replace(spec, n=int(n))
        a = dataclasses.replace(algo, p=1.0 / n) if p_one_over_n else algo
        for li, level in enumerate(levels):
            model = model_at_level(kind, level)
            recs = [run(a, s, model, budget, derive_seed(seed, n, li, r)) for r in range(runs)]
            cost = np.array([r.evaluations_actual for r in recs], dtype=float)
            ok = sum(r.success for r in recs)
            se = float(cost.std(ddof=1) / math.sqrt(runs)) if runs > 1 else float("nan")
            report.rows.append(PntRow(int(n), float(level), float(cost.mean()), se, ok / runs, runs, runs - ok))
    return report


# -- random walk cover time -------------------------------------------------------

@dataclass(frozen=True)
class CoverTimeResult:
    vertices: int
    walks: int
    mean: float
    std_error: float
    bound: int

    @property
    def within_bound(self) -> bool:
        return self.mean <= self.bound


def cover_time_path(vertices: int, walks: int, seed: int, start: str | int = "uniform") -> CoverTimeResult:
    """Random walk on the path ``0 - 1 - ... - (vertices-1)`` until every vertex is visited.

    The bound is ``2|E|(|V|-1) = 2(vertices-1)^2``. All walks advance together.
    """
    if vertices < 2:
        raise ValueError("the path needs at least two vertices")
    rng = np.random.default_rng(seed)
    last = vertices - 1
    if start == "uniform":
        pos = rng.integers(0, vertices, size=walks)
    else:
        pos = np.full(walks, int(start))
    lo, hi = pos.copy(), pos.copy()
    steps = np.zeros(walks, dtype=np.int64)
    active = (lo > 0) | (hi < last)
    while active.any():
        idx = np.flatnonzero(active)
        p = pos[idx]
        move = np.where(rng.random(idx.size) < 0.5, -1, 1)
        move = np.where(p == 0, 1, np.where(p == last, -1, move))
        p = p + move
        pos[idx] = p
        lo[idx] = np.minimum(lo[idx], p)
        hi[idx] = np.maximum(hi[idx], p)
        steps[idx] += 1
        active[idx] = (lo[idx] > 0) | (hi[idx] < last)
    se = float(steps.std(ddof=1) / math.sqrt(walks)) if walks > 1 else 0.0
    return CoverTimeResult(vertices, walks, float(steps.mean()), se, 2 * last * last)


# -- CSV ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(report: Report, path) -> Path:
    """Header plus one row per data point; floats written with ``repr`` so they round-trip."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(report.columns)
        for r in report.rows:
            w.writerow([_cell(getattr(r, c)) for c in report.columns])
    return path


def read_csv(path, row_type: type) -> Report:
    types = {f.name: f.type for f in dataclasses.fields(row_type)}
    conv = {"int": int, "float": float, "str": str}
    report = Report(row_type)
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            report.rows.append(row_type(**{k: conv[str(types[k])](v) for k, v in rec.items()}))
    return report
