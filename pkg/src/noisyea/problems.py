"""Bit strings and the three ones-count-symmetric benchmark families."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class Family(str, Enum):
    ONEMAX = "onemax"
    TRAP = "trap"
    JUMP = "jump"


@dataclass(frozen=True)
class BitString:
    """Immutable binary solution of fixed length."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise ValueError("a bit string needs at least one bit")
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"bits must be 0/1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_int(cls, value: int, n: int) -> "BitString":
        """Most significant bit first, so ``2**n - 1`` is the all-ones string."""
        if not 0 <= value < 2**n:
            raise ValueError(f"{value} does not fit in {n} bits")
        return cls(tuple((value >> (n - 1 - k)) & 1 for k in range(n)))

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        return cls(tuple(int(c) for c in text))

    @classmethod
    def ones_vector(cls, n: int) -> "BitString":
        return cls((1,) * n)

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def ones(self) -> int:
        return sum(self.bits)

    @property
    def zeros(self) -> int:
        return self.n - self.ones

    def to_int(self) -> int:
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        return value

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class ProblemSpec:
    family: Family
    n: int
    m: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if int(self.n) < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.family is Family.JUMP:
            if self.m is None or not 1 <= int(self.m) <= self.n:
                raise ValueError(f"jump needs 1 <= m <= n, got m={self.m}, n={self.n}")
            object.__setattr__(self, "m", int(self.m))
        else:
            object.__setattr__(self, "m", None)

    @classmethod
    def onemax(cls, n: int) -> "ProblemSpec":
        return cls(Family.ONEMAX, n)

    @classmethod
    def trap(cls, n: int) -> "ProblemSpec":
        return cls(Family.TRAP, n)

    @classmethod
    def jump(cls, n: int, m: int) -> "ProblemSpec":
        return cls(Family.JUMP, n, m)

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "n": self.n}
        if self.family is Family.JUMP:
            d["m"] = self.m
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        try:
            return cls(Family(str(d["family"]).lower()), d["n"], d.get("m"))
        except KeyError as exc:
            raise ValueError(f"problem config is missing {exc}") from None


def fitness_of_ones(spec: ProblemSpec, ones: int) -> int:
    """Fitness of any solution with ``ones`` one-bits (all families are symmetric)."""
    n = spec.n
    if not 0 <= ones <= n:
        raise ValueError(f"ones-count {ones} outside [0, {n}]")
    if spec.family is Family.ONEMAX:
        return ones
    if spec.family is Family.TRAP:
        return 3 * n * (ones == n) - ones
    m = spec.m
    if ones <= n - m or ones == n:
        return m + ones
    return n - ones


def fitness_table(spec: ProblemSpec) -> np.ndarray:
    """Fitness indexed by ones-count, ``table[j] = f(x)`` for ``|x|_1 = j``."""
    return np.array([fitness_of_ones(spec, j) for j in range(spec.n + 1)], dtype=np.int64)


def _check_length(spec: ProblemSpec, x: BitString) -> None:
    if x.n != spec.n:
        raise ValueError(f"solution has length {x.n}, problem has n={spec.n}")


def fitness(spec: ProblemSpec, x: BitString) -> int:
    _check_length(spec, x)
    return fitness_of_ones(spec, x.ones)


def is_optimum(spec: ProblemSpec, x: BitString) -> bool:
    _check_length(spec, x)
    return x.ones == spec.n


def all_solutions(n: int) -> Iterable[BitString]:
    for v in range(2**n):
        yield BitString.from_int(v, n)


def ones_counts(n: int) -> np.ndarray:
    """Popcount of every integer label ``0 .. 2**n - 1``."""
    labels = np.arange(2**n)
    return np.array([int(v).bit_count() for v in labels], dtype=np.int64)


def as_bitstring(x: BitString | Sequence[int] | str) -> BitString:
    if isinstance(x, BitString):
        return x
    if isinstance(x, str):
        return BitString.from_str(x)
    return BitString(tuple(x))
