"""Exact lumped Markov chains of the EA and the tools that analyse them.

States are ones-counts ``0..n`` (the optimum is ``n``), except for the
single-evaluation chain whose states are ``(ones, stored value)`` pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Sequence

import numpy as np
from scipy.stats import binom

from .ea import AlgoConfig, EvalPolicy, RuleKind, SelectionRule, sample_transitions
from .noise import NoiseModel, RandomSource, comparison_probabilities, gap_point_mass, value_law
from .problems import Family, ProblemSpec, fitness_of_ones, fitness_table

ROW_TOL = 1e-12


class UnsupportedChainError(ValueError):
    pass


class SingularChainError(np.linalg.LinAlgError):
    def __init__(self, states):
        self.states = list(states)
        super().__init__(f"optimal set unreachable from states {self.states}")


class HypothesisViolation(ValueError):
    """An input breaks one of the conditions of the expectation-ordering lemma."""

    def __init__(self, condition: int, message: str):
        self.condition = condition
        super().__init__(f"condition ({condition}) violated: {message}")


@dataclass(frozen=True, eq=False)
class LumpedChain:
    states: tuple[Hashable, ...]
    kernel: np.ndarray
    optimal: frozenset

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        if k.shape != (len(self.states), len(self.states)):
            raise ValueError(f"kernel shape {k.shape} does not match {len(self.states)} states")
        if np.any(k < -ROW_TOL):
            raise ValueError("kernel has negative entries")
        bad = np.flatnonzero(np.abs(k.sum(axis=1) - 1.0) > ROW_TOL)
        if bad.size:
            raise ValueError(f"rows {[self.states[i] for i in bad]} do not sum to 1")
        if not set(self.optimal) <= set(self.states):
            raise ValueError("optimal states must be a subset of the state list")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "optimal", frozenset(self.optimal))

    def index(self, state) -> int:
        return self.states.index(state)

    @property
    def optimal_mask(self) -> np.ndarray:
        return np.array([s in self.optimal for s in self.states])


@dataclass(frozen=True, eq=False)
class EfhtVector:
    states: tuple[Hashable, ...]
    values: np.ndarray

    def __getitem__(self, state) -> float:
        return float(self.values[self.states.index(state)])

    def as_dict(self) -> dict:
        return dict(zip(self.states, self.values.tolist()))


@dataclass(frozen=True)
class EfhtPartition:
    classes: tuple[frozenset, ...]
    class_efht: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.classes) - 1

    def class_of(self, state) -> int:
        for k, c in enumerate(self.classes):
            if state in c:
                return k
        raise KeyError(state)


def _fsum_rows(k: np.ndarray) -> np.ndarray:
    """Put the diagonal at one minus the compensated sum of the off-diagonal mass."""
    k = np.clip(k, 0.0, None)
    for i in range(k.shape[0]):
        off = math.fsum(k[i, j] for j in range(k.shape[1]) if j != i)
        k[i, i] = max(0.0, 1.0 - off)
    return k


# -- kernels ---------------------------------------------------------------------

def offspring_ones_distribution(n: int, i: int, p: float) -> np.ndarray:
    """Law of ``|mutate(x)|_1`` given ``|x|_1 = i``, indexed by resulting ones-count."""
    if not 0 <= i <= n:
        raise ValueError(f"ones-count {i} outside [0, {n}]")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    lost = binom.pmf(np.arange(i + 1), i, p)          # ones flipped to zero
    gained = binom.pmf(np.arange(n - i + 1), n - i, p)  # zeros flipped to one
    q = np.zeros(n + 1)
    for k, pk in enumerate(lost):
        q[i - k: i - k + n - i + 1] += pk * gained
    return q / math.fsum(q)


def _check_lumpable(spec: ProblemSpec) -> np.ndarray:
    if spec.family not in (Family.ONEMAX, Family.TRAP, Family.JUMP):
        raise UnsupportedChainError(f"no lumped kernel for family {spec.family}")
    ftab = fitness_table(spec)
    if len(set(ftab.tolist())) != len(ftab):
        raise UnsupportedChainError("fitness is not injective on ones-counts")
    return ftab


def _ones_chain(n: int, kernel: np.ndarray) -> LumpedChain:
    return LumpedChain(tuple(range(n + 1)), kernel, frozenset({n}))


def _max_rank_law(q_sorted: np.ndarray, lam: int) -> np.ndarray:
    """Law of the best rank among ``lam`` iid draws from ``q_sorted`` (worst first).

    ``P(best = r) = F(r-1)^lam * expm1(lam * log1p(q_r / F(r-1)))`` keeps full
    relative precision when the top mass is tiny, where ``F(r)^lam - F(r-1)^lam``
    would cancel.
    """
    tail = np.cumsum(q_sorted[::-1])[::-1]  # tail[r] = P(rank >= r)
    out = np.zeros_like(q_sorted)
    for r, qr in enumerate(q_sorted):
        if qr == 0.0:
            continue
        below = 1.0 - tail[r] if tail[r] < 0.5 else math.fsum(q_sorted[:r])  # F(r-1)
        if below <= 0.0:
            out[r] = qr**lam
        else:
            out[r] = math.exp(lam * math.log(below)) * math.expm1(lam * math.log1p(qr / below))
    return out


def noiseless_chain(spec: ProblemSpec, lam: int, p: float) -> LumpedChain:
    """Exact kernel of the noiseless (1+lambda)-EA on ones-count states."""
    ftab = _check_lumpable(spec)
    n = spec.n
    order = np.argsort(ftab)  # ones-counts from worst to best fitness
    k = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        q = offspring_ones_distribution(n, i, p)
        best = _max_rank_law(q[order], lam)
        for r, j in enumerate(order):
            if j != i and ftab[j] > ftab[i]:
                k[i, j] += best[r]
    k[n, :] = 0.0
    k[n, n] = 1.0
    return _ones_chain(n, _fsum_rows(k))


def acceptance_probability(rule: SelectionRule, model: NoiseModel, spec: ProblemSpec,
                           ones_parent: int, ones_offspring: int) -> float:
    """Probability the (1+1)-EA with re-evaluation accepts the offspring."""
    a, b = ones_offspring, ones_parent
    if rule.kind is RuleKind.STANDARD:
        return comparison_probabilities(model, spec, a, b, 0.0)
    if rule.kind is RuleKind.HARD:
        return comparison_probabilities(model, spec, a, b, rule.tau)
    # smooth: gap > 1 always, gap == 1 with probability 1/(5n)
    at_one = gap_point_mass(model, spec, a, b, 1.0)
    above_one = comparison_probabilities(model, spec, a, b, 1.0) - at_one
    return max(0.0, above_one) + at_one / (5 * spec.n)


def noisy_chain_reeval(spec: ProblemSpec, model: NoiseModel, rule: SelectionRule, p: float,
                       lam: int = 1) -> LumpedChain:
    if lam != 1:
        raise UnsupportedChainError("exact noisy kernels exist only for lambda = 1")
    _check_lumpable(spec)
    n = spec.n
    k = np.zeros((n + 1, n + 1))
    for i in range(n):
        q = offspring_ones_distribution(n, i, p)
        for j in range(n + 1):
            if j != i and q[j] > 0.0:
                k[i, j] = q[j] * acceptance_probability(rule, model, spec, i, j)
    k[n, n] = 1.0
    return _ones_chain(n, _fsum_rows(k))


def singleeval_states(spec: ProblemSpec) -> list[tuple[int, float]]:
    """``(ones, stored value)`` pairs reachable under one-bit noise."""
    n = spec.n
    states = []
    for i in range(n + 1):
        vals = {fitness_of_ones(spec, j) for j in (i - 1, i, i + 1) if 0 <= j <= n}
        states.extend((i, v) for v in sorted(vals))
    return states


def noisy_chain_singleeval(spec: ProblemSpec, pn: float, p: float) -> LumpedChain:
    """(1+1)-EA, standard selection, one-bit noise, parent value stored once.

    An offspring is accepted iff its noisy value is ``>=`` the stored value;
    acceptance replaces both coordinates of the state.
    """
    _check_lumpable(spec)
    if not 0.0 <= pn <= 1.0:
        raise ValueError(f"p_n must lie in [0, 1], got {pn}")
    model = NoiseModel.one_bit(pn)
    n = spec.n
    states = singleeval_states(spec)
    pos = {s: k for k, s in enumerate(states)}
    k = np.zeros((len(states), len(states)))
    laws = [value_law(model, spec, j).atoms for j in range(n + 1)]
    for (i, stored), row in pos.items():
        if i == n:
            k[row, row] = 1.0
            continue
        q = offspring_ones_distribution(n, i, p)
        for j in range(n + 1):
            if q[j] == 0.0:
                continue
            for v, pv in laws[j]:
                if v >= stored and (j, v) != (i, stored):
                    k[row, pos[(j, v)]] += q[j] * pv
    optimal = frozenset(s for s in states if s[0] == n)
    return LumpedChain(tuple(states), _fsum_rows(k), optimal)


def singleeval_initial_distribution(chain: LumpedChain, spec: ProblemSpec, pn: float) -> np.ndarray:
    """Uniform random initial solution evaluated once under one-bit noise."""
    n = spec.n
    model = NoiseModel.one_bit(pn)
    pi = np.zeros(len(chain.states))
    for i in range(n + 1):
        w = math.comb(n, i) / 2**n
        for v, pv in value_law(model, spec, i).atoms:
            pi[chain.index((i, v))] += w * pv
    return pi


def uniform_initial_distribution(n: int) -> np.ndarray:
    return np.array([math.comb(n, i) / 2**n for i in range(n + 1)])


# -- hitting times --------------------------------------------------------------

def _unreachable(chain: LumpedChain) -> list:
    reach = chain.optimal_mask.copy()
    adj = chain.kernel > 0.0
    changed = True
    while changed:
        new = reach | (adj & reach[None, :]).any(axis=1)
        changed = bool((new != reach).any())
        reach = new
    return [s for s, r in zip(chain.states, reach) if not r]


def efht_solve(chain: LumpedChain) -> EfhtVector:
    """Solve ``E = 0`` on optimal states, ``E = 1 + P E`` elsewhere."""
    bad = _unreachable(chain)
    if bad:
        raise SingularChainError(bad)
    opt = chain.optimal_mask
    tr = ~opt
    E = np.zeros(len(chain.states))
    if tr.any():
        A = -chain.kernel[np.ix_(tr, tr)]
        # the diagonal of I - P is the exit mass; summing it directly avoids 1 - (1 - q)
        rows = np.flatnonzero(tr)
        for a, r in enumerate(rows):
            A[a, a] = math.fsum(chain.kernel[r, j] for j in range(len(chain.states)) if j != r)
        E[tr] = np.linalg.solve(A, np.ones(int(tr.sum())))
        resid = np.abs(E[tr] - 1.0 - chain.kernel[tr] @ E)
        if np.any(resid > 1e-9 * np.maximum(1.0, E[tr])):
            raise np.linalg.LinAlgError(f"EFHT residual too large: {resid.max():.3g}")
    return EfhtVector(chain.states, E)


def expected_from(E: EfhtVector, pi: Sequence[float]) -> float:
    return float(np.dot(pi, E.values))


def efht_partition(E: EfhtVector, tol: float = 1e-9) -> EfhtPartition:
    order = sorted(range(len(E.states)), key=lambda k: E.values[k])
    classes: list[list] = []
    heads: list[float] = []
    for k in order:
        v = float(E.values[k])
        if classes and abs(v - heads[-1]) <= tol:
            classes[-1].append(E.states[k])
        else:
            classes.append([E.states[k]])
            heads.append(v)
    return EfhtPartition(tuple(frozenset(c) for c in classes), tuple(heads))


# -- dominance conditions ---------------------------------------------------------

class Verdict(str, Enum):
    EASIER = "EasierConditionHolds"
    HARDER = "HarderConditionHolds"
    BOTH = "Both"
    NEITHER = "Neither"


@dataclass(frozen=True)
class Witness:
    state: Hashable
    i: int
    noisy_cumulative: float
    noiseless_cumulative: float


@dataclass(frozen=True)
class DominanceResult:
    verdict: Verdict
    easier_witness: Witness | None  # first (x, i) breaking the easier condition
    harder_witness: Witness | None

    @property
    def witness(self) -> Witness | None:
        return self.easier_witness or self.harder_witness


def class_masses(chain: LumpedChain, partition: EfhtPartition) -> np.ndarray:
    """``M[x, j]`` = one-step probability of moving from state x into class j."""
    member = np.zeros((len(chain.states), len(partition.classes)))
    for j, c in enumerate(partition.classes):
        for s in c:
            member[chain.index(s), j] = 1.0
    return chain.kernel @ member


def compare_cumulative(noisy_rows: np.ndarray, noiseless_rows: np.ndarray, states, optimal,
                       slack: np.ndarray | float = ROW_TOL) -> DominanceResult:
    """Check both cumulative class-mass orderings on every non-optimal row."""
    cn = np.cumsum(noisy_rows, axis=1)[:, :-1]
    cc = np.cumsum(noiseless_rows, axis=1)[:, :-1]
    slack = np.broadcast_to(np.asarray(slack, dtype=float), cn.shape)
    easier = harder = None
    for r, s in enumerate(states):
        if s in optimal:
            continue
        for i in range(cn.shape[1]):
            if easier is None and cn[r, i] < cc[r, i] - slack[r, i]:
                easier = Witness(s, i, float(cn[r, i]), float(cc[r, i]))
            if harder is None and cn[r, i] > cc[r, i] + slack[r, i]:
                harder = Witness(s, i, float(cn[r, i]), float(cc[r, i]))
    verdict = {
        (True, True): Verdict.BOTH, (True, False): Verdict.EASIER,
        (False, True): Verdict.HARDER, (False, False): Verdict.NEITHER,
    }[(easier is None, harder is None)]
    return DominanceResult(verdict, easier, harder)


def dominance_check(noisy: LumpedChain, noiseless: LumpedChain, partition: EfhtPartition,
                    tol: float = ROW_TOL) -> DominanceResult:
    if noisy.states != noiseless.states:
        raise ValueError("noisy and noiseless chains must share the state space")
    return compare_cumulative(class_masses(noisy, partition), class_masses(noiseless, partition),
                              noisy.states, noisy.optimal, tol)


# -- drift ------------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftReport:
    c_l: float
    c_u: float
    lower: np.ndarray | None  # V / c_u
    upper: np.ndarray | None  # V / c_l


def drift_report(chain: LumpedChain, V: EfhtVector) -> DriftReport:
    v = np.asarray(V.values, dtype=float)
    if V.states != chain.states:
        raise ValueError("distance function is not defined on the chain's states")
    opt = chain.optimal_mask
    if np.any(v[opt] != 0.0) or np.any(v[~opt] <= 0.0):
        raise ValueError("distance must vanish exactly on optimal states and be positive elsewhere")
    drift = (v - chain.kernel @ v)[~opt]
    c_l, c_u = float(drift.min()), float(drift.max())
    return DriftReport(
        c_l, c_u,
        lower=v / c_u if c_u > 0 else None,
        upper=v / c_l if c_l > 0 else None,
    )


# -- expectation-ordering lemma -----------------------------------------------------------

def lemma4_oracle(P, Q, E, tol: float = 1e-12) -> bool:
    """Return whether ``sum P_i E_i >= sum Q_i E_i`` after validating the hypotheses.

    Hypotheses: (1) P and Q are probability vectors of equal length >= 2;
    (2) ``0 <= E_0 < E_1 < ... < E_m``; (3) every proper prefix sum of P is
    at most that of Q.
    """
    P, Q, E = (np.asarray(a, dtype=float) for a in (P, Q, E))
    if not (P.ndim == Q.ndim == E.ndim == 1 and len(P) == len(Q) == len(E) >= 2):
        raise HypothesisViolation(1, "P, Q, E must be vectors of one common length >= 2")
    for name, a in (("P", P), ("Q", Q)):
        if np.any(a < 0) or abs(math.fsum(a) - 1.0) > 1e-9:
            raise HypothesisViolation(1, f"{name} is not a probability vector")
    if E[0] < 0 or np.any(np.diff(E) <= 0):
        raise HypothesisViolation(2, "E must be non-negative and strictly increasing")
    cp, cq = np.cumsum(P)[:-1], np.cumsum(Q)[:-1]
    if np.any(cp > cq + 1e-12):
        k = int(np.flatnonzero(cp > cq + 1e-12)[0])
        raise HypothesisViolation(3, f"prefix {k}: {cp[k]} > {cq[k]}")
    lhs = math.fsum(P * E)
    rhs = math.fsum(Q * E)
    return lhs >= rhs - tol * max(1.0, abs(E).max())


def random_lemma4_instance(rng: np.random.Generator, max_m: int = 20):
    """A random (P, Q, E) satisfying all three hypotheses.

    P starts as Q and repeatedly pushes mass to higher indices, which can only
    lower its prefix sums.
    """
    m = int(rng.integers(1, max_m + 1))
    Q = rng.dirichlet(np.ones(m + 1) * rng.uniform(0.2, 2.0))
    P = Q.copy()
    for i in range(m):
        j = int(rng.integers(i + 1, m + 1))
        moved = P[i] * rng.random()
        P[i] -= moved
        P[j] += moved
    E = np.cumsum(rng.exponential(1.0, m + 1))
    if rng.random() < 0.3:
        E -= E[0]
    return P, Q, E


# -- Monte Carlo rows for lambda > 1 ----------------------------------------------------

def estimate_chain(spec: ProblemSpec, model: NoiseModel, algo: AlgoConfig, steps: int,
                   rng: RandomSource) -> tuple[LumpedChain, int]:
    """Empirical re-evaluation kernel from ``steps`` simulated iterations per state.

    Used where the argmax over jointly noisy candidates has no cheap exact law.
    """
    _check_lumpable(spec)
    algo = AlgoConfig(algo.lam, algo.p, algo.rule, EvalPolicy.REEVAL)
    n = spec.n
    k = np.zeros((n + 1, n + 1))
    for i in range(n):
        k[i] = sample_transitions(algo, spec, model, i, steps, rng) / steps
    k[n, n] = 1.0
    return _ones_chain(n, _fsum_rows(k)), steps


def mc_dominance_check(estimated: LumpedChain, steps: int, noiseless: LumpedChain,
                       partition: EfhtPartition, sigmas: float = 4.0) -> DominanceResult:
    """Dominance check that forgives deviations within ``sigmas`` binomial standard errors."""
    mn = class_masses(estimated, partition)
    mc = class_masses(noiseless, partition)
    cn = np.cumsum(mn, axis=1)[:, :-1]
    cc = np.cumsum(mc, axis=1)[:, :-1]
    var = np.maximum(cn * (1 - cn), cc * (1 - cc))
    slack = sigmas * np.sqrt(np.clip(var, 0.0, None) / steps) + ROW_TOL
    return compare_cumulative(mn, mc, estimated.states, estimated.optimal, slack)
