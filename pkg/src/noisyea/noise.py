"""Noise channels on fitness evaluation and exact comparison probabilities.

Random draws follow a fixed convention so that the compiled run loop in
:mod:`noisyea.ea` reproduces these functions draw-for-draw:

* additive / multiplicative: one ``rng.random()`` giving ``d1 + (d2 - d1) * u``
* one-bit: one ``rng.random() < p_n`` test, and on success one more
  ``rng.random()`` selecting the flipped position ``floor(u * n)``
* noiseless: no draws
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .problems import BitString, ProblemSpec, fitness_of_ones

RandomSource = np.random.Generator


def make_rng(seed: int) -> RandomSource:
    return np.random.Generator(np.random.PCG64(int(seed)))


class NoiseKind(str, Enum):
    NONE = "none"
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    ONE_BIT = "one_bit"


# integer codes consumed by the compiled kernels
KIND_CODES = {
    NoiseKind.NONE: 0,
    NoiseKind.ADDITIVE: 1,
    NoiseKind.MULTIPLICATIVE: 2,
    NoiseKind.ONE_BIT: 3,
}


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind = NoiseKind.NONE
    d1: float = 0.0
    d2: float = 0.0
    pn: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.kind in (NoiseKind.ADDITIVE, NoiseKind.MULTIPLICATIVE):
            if not self.d1 <= self.d2:
                raise ValueError(f"need d1 <= d2, got d1={self.d1}, d2={self.d2}")
        if self.kind is NoiseKind.ONE_BIT and not 0.0 <= self.pn <= 1.0:
            raise ValueError(f"p_n must lie in [0, 1], got {self.pn}")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(NoiseKind.NONE)

    @classmethod
    def additive(cls, d1: float, d2: float) -> "NoiseModel":
        return cls(NoiseKind.ADDITIVE, d1=float(d1), d2=float(d2))

    @classmethod
    def multiplicative(cls, d1: float, d2: float) -> "NoiseModel":
        return cls(NoiseKind.MULTIPLICATIVE, d1=float(d1), d2=float(d2))

    @classmethod
    def one_bit(cls, pn: float) -> "NoiseModel":
        return cls(NoiseKind.ONE_BIT, pn=float(pn))

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    def kernel_params(self) -> tuple[int, float, float]:
        """``(code, a, b)`` for the compiled loop."""
        if self.kind is NoiseKind.ONE_BIT:
            return self.code, self.pn, 0.0
        return self.code, self.d1, self.d2

    def to_dict(self) -> dict:
        if self.kind is NoiseKind.NONE:
            return {"noise": "none"}
        if self.kind is NoiseKind.ONE_BIT:
            return {"noise": "one_bit", "pn": self.pn}
        return {"noise": self.kind.value, "d1": self.d1, "d2": self.d2}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        kind = NoiseKind(str(d.get("noise", "none")).lower())
        if kind is NoiseKind.NONE:
            return cls.noiseless()
        if kind is NoiseKind.ONE_BIT:
            return cls.one_bit(d["pn"])
        return cls(kind, d1=float(d["d1"]), d2=float(d["d2"]))


def noisy_fitness(model: NoiseModel, spec: ProblemSpec, x: BitString, rng: RandomSource) -> float:
    if x.n != spec.n:
        raise ValueError(f"solution has length {x.n}, problem has n={spec.n}")
    return noisy_fitness_of_bits(model, spec, x.bits, x.ones, rng)


def noisy_fitness_of_bits(model, spec, bits, ones, rng) -> float:
    f = fitness_of_ones(spec, ones)
    kind = model.kind
    if kind is NoiseKind.NONE:
        return float(f)
    if kind is NoiseKind.ADDITIVE:
        return f + model.d1 + (model.d2 - model.d1) * rng.random()
    if kind is NoiseKind.MULTIPLICATIVE:
        return f * (model.d1 + (model.d2 - model.d1) * rng.random())
    if rng.random() < model.pn:
        k = min(int(rng.random() * spec.n), spec.n - 1)
        return float(fitness_of_ones(spec, ones - 1 if bits[k] else ones + 1))
    return float(f)


# -- exact laws of a single noisy evaluation ---------------------------------

@dataclass(frozen=True)
class _Discrete:
    atoms: tuple[tuple[float, float], ...]  # (value, probability)


@dataclass(frozen=True)
class _Affine:
    # value = offset + scale * U, U ~ Uniform[0, 1], scale != 0
    offset: float
    scale: float


def value_law(model: NoiseModel, spec: ProblemSpec, ones: int):
    """Law of ``f^N(x)`` for ``|x|_1 = ones``: atoms, or an affine image of U[0,1]."""
    n = spec.n
    if not 0 <= ones <= n:
        raise ValueError(f"ones-count {ones} outside [0, {n}]")
    f = float(fitness_of_ones(spec, ones))
    kind = model.kind
    if kind is NoiseKind.NONE:
        return _Discrete(((f, 1.0),))
    if kind is NoiseKind.ONE_BIT:
        pn = model.pn
        atoms: dict[float, float] = {}

        def add(v, w):
            if w > 0.0:
                atoms[v] = atoms.get(v, 0.0) + w

        add(f, 1.0 - pn)
        if ones > 0:
            add(float(fitness_of_ones(spec, ones - 1)), pn * ones / n)
        if ones < n:
            add(float(fitness_of_ones(spec, ones + 1)), pn * (n - ones) / n)
        return _Discrete(tuple(sorted(atoms.items())))
    width = model.d2 - model.d1
    if kind is NoiseKind.ADDITIVE:
        if width == 0.0:
            return _Discrete(((f + model.d1, 1.0),))
        return _Affine(f + model.d1, width)
    if f == 0.0 or width == 0.0:
        return _Discrete(((f * model.d1, 1.0),))
    return _Affine(f * model.d1, f * width)


def _uniform_ge(offset: float, scale: float, c: float) -> float:
    """P[offset + scale * U >= c] for U ~ U[0,1]."""
    # offset + scale*u >= c  <=>  u >= (c-offset)/scale if scale > 0
    r = (c - offset) / scale
    if scale > 0:
        return float(min(1.0, max(0.0, 1.0 - r)))
    return float(min(1.0, max(0.0, r)))


def _halfplane_square(alpha: float, beta: float, c: float) -> float:
    """Area of {(u, v) in [0,1]^2 : alpha*u + beta*v >= c} by polygon clipping."""
    poly = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    g = [alpha * u + beta * v - c for u, v in poly]
    clipped = []
    for k in range(4):
        p, q = poly[k], poly[(k + 1) % 4]
        gp, gq = g[k], g[(k + 1) % 4]
        if gp >= 0:
            clipped.append(p)
        if (gp >= 0) != (gq >= 0):
            s = gp / (gp - gq)
            clipped.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
    if len(clipped) < 3:
        return 0.0
    area = 0.0
    for k in range(len(clipped)):
        (x0, y0), (x1, y1) = clipped[k], clipped[(k + 1) % len(clipped)]
        area += x0 * y1 - x1 * y0
    return float(min(1.0, max(0.0, abs(area) / 2.0)))


def _prob_ge(law_a, law_b, t: float) -> float:
    """P[A >= B + t] for independent A ~ law_a, B ~ law_b."""
    if isinstance(law_a, _Discrete) and isinstance(law_b, _Discrete):
        return float(sum(pa * pb for va, pa in law_a.atoms for vb, pb in law_b.atoms if va >= vb + t))
    if isinstance(law_a, _Discrete):
        # A = a  >=  off + s*U + t  <=>  -(s)U >= off + t - a
        return float(sum(pa * _uniform_ge(-law_b.offset, -law_b.scale, t - va) for va, pa in law_a.atoms))
    if isinstance(law_b, _Discrete):
        return float(sum(pb * _uniform_ge(law_a.offset, law_a.scale, vb + t) for vb, pb in law_b.atoms))
    # a0 + a1*U - b0 - b1*V >= t
    return _halfplane_square(law_a.scale, -law_b.scale, t - (law_a.offset - law_b.offset))


def comparison_probabilities(
    model: NoiseModel, spec: ProblemSpec, ones_a: int, ones_b: int, threshold: float = 0.0
) -> float:
    """Exact ``P[f^N(a) >= f^N(b) + threshold]`` for independent evaluations.

    Ties count as ``>=``. Noiseless returns the indicator of the true comparison.
    """
    return _prob_ge(value_law(model, spec, ones_a), value_law(model, spec, ones_b), float(threshold))


def gap_point_mass(model: NoiseModel, spec: ProblemSpec, ones_a: int, ones_b: int, gap: float) -> float:
    """``P[f^N(a) - f^N(b) == gap]``; non-zero only when both evaluations are atomic."""
    la, lb = value_law(model, spec, ones_a), value_law(model, spec, ones_b)
    if not (isinstance(la, _Discrete) and isinstance(lb, _Discrete)):
        return 0.0
    return float(sum(pa * pb for va, pa in la.atoms for vb, pb in lb.atoms if va - vb == gap))
