"""Per-operation shape distributions: memory hop counts and IO counts.

Each distribution knows its mean and can build a sampler bound to a
``random.Random`` instance, so a seed fully determines the drawn sequence.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Union


@dataclass(frozen=True)
class Fixed:
    value: int

    def __post_init__(self):
        if int(self.value) != self.value or self.value < 0:
            raise ValueError(f"Fixed hop count must be a non-negative integer, got {self.value!r}")

    @property
    def mean(self) -> float:
        return float(self.value)

    @property
    def variance(self) -> float:
        return 0.0

    def sampler(self, rng: random.Random) -> Callable[[], int]:
        v = int(self.value)
        return lambda: v


@dataclass(frozen=True)
class UniformRange:
    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi) or int(self.lo) != self.lo or int(self.hi) != self.hi:
            raise ValueError(f"UniformRange needs integers 0 <= lo <= hi, got {self.lo!r}, {self.hi!r}")

    @property
    def mean(self) -> float:
        return (self.lo + self.hi) / 2

    @property
    def variance(self) -> float:
        n = self.hi - self.lo + 1
        return (n * n - 1) / 12

    def sampler(self, rng: random.Random) -> Callable[[], int]:
        lo, hi = int(self.lo), int(self.hi)
        return lambda: rng.randint(lo, hi)


@dataclass(frozen=True)
class Geometric:
    """Geometric on {1, 2, ...} with the given mean (memoryless search length)."""

    mean: float

    def __post_init__(self):
        if not self.mean >= 1:
            raise ValueError(f"Geometric mean must be >= 1, got {self.mean!r}")

    @property
    def variance(self) -> float:
        p = 1 / self.mean
        return (1 - p) / (p * p)

    def sampler(self, rng: random.Random) -> Callable[[], int]:
        if self.mean == 1:
            return lambda: 1
        log_q = math.log1p(-1 / self.mean)
        rand = rng.random
        # 1 - U keeps the argument of log in (0, 1]
        return lambda: 1 + int(math.log(1.0 - rand()) / log_q)


HopDistribution = Union[Fixed, UniformRange, Geometric]


@dataclass(frozen=True)
class FixedIOs:
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 0:
            raise ValueError(f"IO count must be a non-negative integer, got {self.count!r}")

    @property
    def mean(self) -> float:
        return float(self.count)

    def sampler(self, rng: random.Random) -> Callable[[], int]:
        n = int(self.count)
        return lambda: n


@dataclass(frozen=True)
class HitRatio:
    """No IO with probability ``hit``, otherwise one IO."""

    hit: float

    def __post_init__(self):
        if not 0 <= self.hit <= 1:
            raise ValueError(f"hit ratio must be in [0, 1], got {self.hit!r}")

    @property
    def mean(self) -> float:
        return 1.0 - self.hit

    def sampler(self, rng: random.Random) -> Callable[[], int]:
        h = self.hit
        rand = rng.random
        return lambda: 0 if rand() < h else 1


@dataclass(frozen=True)
class TwoTier:
    """Two-level cache: a tier-1 hit costs no IO, a tier-2 hit one IO, a miss ``miss_ios``."""

    h1: float
    h2: float
    miss_ios: int = 1

    def __post_init__(self):
        if not (0 <= self.h1 <= 1 and 0 <= self.h2 <= 1):
            raise ValueError(f"hit ratios must be in [0, 1], got {self.h1!r}, {self.h2!r}")
        if int(self.miss_ios) != self.miss_ios or self.miss_ios < 0:
            raise ValueError(f"miss_ios must be a non-negative integer, got {self.miss_ios!r}")

    @property
    def mean(self) -> float:
        return (1 - self.h1) * (self.h2 + (1 - self.h2) * self.miss_ios)

    def sampler(self, rng: random.Random) -> Callable[[], int]:
        h1, h2, miss = self.h1, self.h2, int(self.miss_ios)
        rand = rng.random

        def draw():
            if rand() < h1:
                return 0
            return 1 if rand() < h2 else miss

        return draw


IOCountModel = Union[FixedIOs, HitRatio, TwoTier]


def hops_from_dict(d: dict) -> HopDistribution:
    kind = d.get("kind", "fixed").lower()
    if kind == "fixed":
        return Fixed(int(d["value"]))
    if kind in ("uniform", "uniform_range"):
        return UniformRange(int(d["lo"]), int(d["hi"]))
    if kind == "geometric":
        return Geometric(float(d["mean"]))
    raise ValueError(f"unknown hop distribution kind {kind!r}")


def hops_to_dict(h: HopDistribution) -> dict:
    if isinstance(h, Fixed):
        return {"kind": "fixed", "value": h.value}
    if isinstance(h, UniformRange):
        return {"kind": "uniform", "lo": h.lo, "hi": h.hi}
    return {"kind": "geometric", "mean": h.mean}


def ios_from_dict(d: dict) -> IOCountModel:
    kind = d.get("kind", "fixed").lower()
    if kind == "fixed":
        return FixedIOs(int(d["count"]))
    if kind in ("hit_ratio", "hitratio"):
        return HitRatio(float(d["hit"]))
    if kind in ("two_tier", "twotier"):
        return TwoTier(float(d["h1"]), float(d["h2"]), int(d.get("miss_ios", 1)))
    raise ValueError(f"unknown IO count model kind {kind!r}")


def ios_to_dict(m: IOCountModel) -> dict:
    if isinstance(m, FixedIOs):
        return {"kind": "fixed", "count": m.count}
    if isinstance(m, HitRatio):
        return {"kind": "hit_ratio", "hit": m.hit}
    return {"kind": "two_tier", "h1": m.h1, "h2": m.h2, "miss_ios": m.miss_ios}
