"""(1+lambda)-EA with bit-wise mutation, noisy selection and evaluation accounting.

Draw order inside one iteration is fixed: the ``n`` mutation draws of each
offspring in turn, then the noisy evaluation of the parent (re-evaluation
only), then the offspring evaluations in index order, then the smooth
threshold coin when the gap is exactly 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from numba import njit

from .noise import NoiseModel, RandomSource, make_rng
from .problems import BitString, ProblemSpec, fitness_table


class RuleKind(str, Enum):
    STANDARD = "standard"
    HARD = "hard"
    SMOOTH = "smooth"


_RULE_CODES = {RuleKind.STANDARD: 0, RuleKind.HARD: 1, RuleKind.SMOOTH: 2}


@dataclass(frozen=True)
class SelectionRule:
    kind: RuleKind = RuleKind.STANDARD
    tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if self.kind is RuleKind.HARD and not self.tau >= 0:
            raise ValueError(f"hard threshold needs tau >= 0, got {self.tau}")

    @classmethod
    def standard(cls) -> "SelectionRule":
        return cls(RuleKind.STANDARD)

    @classmethod
    def hard(cls, tau: float) -> "SelectionRule":
        return cls(RuleKind.HARD, float(tau))

    @classmethod
    def smooth(cls) -> "SelectionRule":
        return cls(RuleKind.SMOOTH)

    @property
    def code(self) -> int:
        return _RULE_CODES[self.kind]

    def to_dict(self) -> dict:
        if self.kind is RuleKind.HARD:
            return {"kind": "hard", "tau": self.tau}
        return {"kind": self.kind.value}

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionRule":
        kind = RuleKind(str(d.get("kind", "standard")).lower())
        return cls(kind, float(d.get("tau", 0.0)) if kind is RuleKind.HARD else 0.0)


class EvalPolicy(str, Enum):
    SINGLE = "single"
    REEVAL = "reeval"


@dataclass(frozen=True)
class AlgoConfig:
    lam: int = 1
    p: float = 0.1
    rule: SelectionRule = SelectionRule()
    policy: EvalPolicy = EvalPolicy.SINGLE

    def __post_init__(self):
        object.__setattr__(self, "policy", EvalPolicy(self.policy))
        if int(self.lam) < 1:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not 0.0 < self.p < 0.5:
            raise ValueError(f"mutation probability must lie in (0, 0.5), got {self.p}")
        if self.rule.kind is not RuleKind.STANDARD and self.lam != 1:
            raise ValueError("threshold selection is only defined for lambda = 1")

    @property
    def evals_per_iteration(self) -> int:
        """Fitness calls actually made per iteration."""
        return self.lam + (self.policy is EvalPolicy.REEVAL)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "p": self.p, "rule": self.rule.to_dict(), "policy": self.policy.value}

    @classmethod
    def from_dict(cls, d: dict) -> "AlgoConfig":
        return cls(
            lam=int(d.get("lambda", 1)),
            p=float(d["p"]),
            rule=SelectionRule.from_dict(d.get("rule", {"kind": "standard"})),
            policy=EvalPolicy(str(d.get("policy", "single")).lower()),
        )


@dataclass(frozen=True)
class RunRecord:
    iterations: int
    evaluations_paper: int
    evaluations_actual: int
    success: bool
    seed: int
    final_ones: int

    @property
    def censored(self) -> bool:
        return not self.success

    def to_dict(self) -> dict:
        return asdict(self)


# -- per-step operations ------------------------------------------------------

def mutate(x: BitString, p: float, rng: RandomSource) -> BitString:
    """Flip each bit independently with probability ``p``."""
    if not 0.0 < p < 0.5:
        raise ValueError(f"mutation probability must lie in (0, 0.5), got {p}")
    return BitString(tuple(b ^ (rng.random() < p) for b in x.bits))


def accept(rule: SelectionRule, n: int, fn_parent: float, fn_offspring: float, rng: RandomSource) -> bool:
    if rule.kind is RuleKind.STANDARD:
        return fn_offspring >= fn_parent
    if rule.kind is RuleKind.HARD:
        return fn_offspring >= fn_parent + rule.tau
    gap = fn_offspring - fn_parent
    if gap <= 0:
        return False
    if gap == 1:
        return rng.random() < 1.0 / (5 * n)
    # gaps strictly between 0 and 1 are rejected
    return gap > 1


# -- compiled loop --------------------------------------------------------------

@njit(cache=True, nogil=True)
def _noisy(code, a, b, ftab, bits, ones, n, rng):
    f = ftab[ones]
    if code == 0:
        return float(f)
    if code == 1:
        return f + a + (b - a) * rng.random()
    if code == 2:
        return f * (a + (b - a) * rng.random())
    if rng.random() < a:
        k = int(rng.random() * n)
        if k >= n:
            k = n - 1
        if bits[k]:
            return float(ftab[ones - 1])
        return float(ftab[ones + 1])
    return float(f)


@njit(cache=True, nogil=True)
def _accept(rule, tau, n, fp, fo, rng):
    if rule == 0:
        return fo >= fp
    if rule == 1:
        return fo >= fp + tau
    g = fo - fp
    if g <= 0.0:
        return False
    if g == 1.0:
        return rng.random() < 1.0 / (5.0 * n)
    return g > 1.0


@njit(cache=True, nogil=True)
def _iteration(x, ones, stored, off, off_ones, p, rule, tau, reeval, code, a, b, ftab, rng):
    """One generation in place on ``x``; returns (ones, stored parent value)."""
    lam, n = off.shape
    for i in range(lam):
        c = ones
        for k in range(n):
            bit = x[k]
            if rng.random() < p:
                bit = 1 - bit
                c += 1 if bit else -1
            off[i, k] = bit
        off_ones[i] = c
    fp = _noisy(code, a, b, ftab, x, ones, n, rng) if reeval else stored
    if lam == 1:
        fo = _noisy(code, a, b, ftab, off[0], off_ones[0], n, rng)
        if _accept(rule, tau, n, fp, fo, rng):
            x[:] = off[0]
            return off_ones[0], fo
        return ones, fp
    best = -1
    best_val = fp
    for i in range(lam):
        fo = _noisy(code, a, b, ftab, off[i], off_ones[i], n, rng)
        if fo > best_val:
            best = i
            best_val = fo
    if best < 0:
        return ones, fp
    x[:] = off[best]
    return off_ones[best], best_val


@njit(cache=True, nogil=True)
def _run_loop(x, lam, p, rule, tau, reeval, code, a, b, ftab, budget, rng):
    n = x.shape[0]
    ones = 0
    for k in range(n):
        ones += x[k]
    stored = _noisy(code, a, b, ftab, x, ones, n, rng)
    actual = 1
    iters = 0
    cost = lam + (1 if reeval else 0)
    off = np.empty((lam, n), dtype=np.uint8)
    off_ones = np.empty(lam, dtype=np.int64)
    while ones < n and actual + cost <= budget:
        ones, stored = _iteration(x, ones, stored, off, off_ones, p, rule, tau, reeval, code, a, b, ftab, rng)
        iters += 1
        actual += cost
    return iters, actual, ones


@njit(cache=True, nogil=True)
def _sample_steps(n, start_ones, steps, lam, p, rule, tau, code, a, b, ftab, rng):
    counts = np.zeros(n + 1, dtype=np.int64)
    x = np.zeros(n, dtype=np.uint8)
    off = np.empty((lam, n), dtype=np.uint8)
    off_ones = np.empty(lam, dtype=np.int64)
    for _ in range(steps):
        for k in range(n):
            x[k] = 1 if k < start_ones else 0
        ones, _v = _iteration(x, start_ones, 0.0, off, off_ones, p, rule, tau, True, code, a, b, ftab, rng)
        counts[ones] += 1
    return counts


def _kernel_args(config: AlgoConfig, spec: ProblemSpec, model: NoiseModel):
    code, a, b = model.kernel_params()
    return (
        config.lam, float(config.p), config.rule.code, float(config.rule.tau),
        config.policy is EvalPolicy.REEVAL, code, float(a), float(b),
        fitness_table(spec).astype(np.float64),
    )


def run_from(config: AlgoConfig, spec: ProblemSpec, model: NoiseModel, x0: BitString,
             budget: int, seed: int, rng: RandomSource | None = None) -> RunRecord:
    """Run from a caller-fixed initial solution until the true optimum is the parent.

    The loop never starts an iteration whose evaluations would push the
    actual count past ``budget``; such runs come back with ``success=False``.
    """
    if budget < 1:
        raise ValueError(f"budget must be at least 1, got {budget}")
    if x0.n != spec.n:
        raise ValueError(f"initial solution has length {x0.n}, problem has n={spec.n}")
    if rng is None:
        rng = make_rng(seed)
    lam, p, rule, tau, reeval, code, a, b, ftab = _kernel_args(config, spec, model)
    x = x0.to_array()
    iters, actual, ones = _run_loop(x, lam, p, rule, tau, reeval, code, a, b, ftab, int(budget), rng)
    return RunRecord(
        iterations=int(iters),
        evaluations_paper=1 + config.lam * int(iters),
        evaluations_actual=int(actual),
        success=bool(ones == spec.n),
        seed=int(seed),
        final_ones=int(ones),
    )


def run(config: AlgoConfig, spec: ProblemSpec, model: NoiseModel, budget: int, seed: int) -> RunRecord:
    """Run from a uniformly random initial solution (``n`` draws, bit set iff ``u < 1/2``)."""
    rng = make_rng(seed)
    x0 = BitString(tuple(int(u < 0.5) for u in rng.random(spec.n)))
    return run_from(config, spec, model, x0, budget, seed, rng=rng)


def sample_transitions(config: AlgoConfig, spec: ProblemSpec, model: NoiseModel,
                       ones: int, steps: int, rng: RandomSource) -> np.ndarray:
    """Counts of the next parent's ones-count over ``steps`` independent single
    re-evaluated iterations started from a parent with ``ones`` one-bits."""
    if not 0 <= ones <= spec.n:
        raise ValueError(f"ones-count {ones} outside [0, {spec.n}]")
    lam, p, rule, tau, _reeval, code, a, b, ftab = _kernel_args(config, spec, model)
    return _sample_steps(spec.n, int(ones), int(steps), lam, p, rule, tau, code, a, b, ftab, rng)
