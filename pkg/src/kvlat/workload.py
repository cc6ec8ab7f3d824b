"""KV-store shaped operation profiles and their reduction to per-IO model inputs.

A profile gives the distribution of memory hops and of IOs per operation.
The analytical model wants a per-IO hop count M and a mean IO count S, so
an operation with S IOs is treated as S pieces of M = hops/S each.  The
simulator can run the profile directly (``to_sim_config``), which is the
ground truth when the shape is skewed.
"""
from __future__ import annotations

from dataclasses import dataclass

from .distributions import (
    Fixed,
    FixedIOs,
    HitRatio,
    HopDistribution,
    IOCountModel,
    TwoTier,
    hops_from_dict,
    hops_to_dict,
    ios_from_dict,
    ios_to_dict,
)
from .params import OperationModelParams
from .sim import SimConfig

# Hop count used where a store's traversal length is not known.
DEFAULT_HOPS = 10


@dataclass(frozen=True)
class WorkloadProfile:
    name: str
    hops_per_op: HopDistribution
    io_count_model: IOCountModel
    read_fraction: float = 1.0  # recorded only; reads and writes cost the same

    def __post_init__(self):
        if not 0.0 <= self.read_fraction <= 1.0:
            raise ValueError(f"read_fraction must be in [0, 1], got {self.read_fraction!r}")

    @property
    def mean_hops(self) -> float:
        return self.hops_per_op.mean

    @property
    def mean_ios(self) -> float:
        return self.io_count_model.mean

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "hops": hops_to_dict(self.hops_per_op),
            "ios": ios_to_dict(self.io_count_model),
            "read_fraction": self.read_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> WorkloadProfile:
        return cls(
            name=str(d.get("name", "custom")),
            hops_per_op=hops_from_dict(d["hops"]),
            io_count_model=ios_from_dict(d["ios"]),
            read_fraction=float(d.get("read_fraction", 1.0)),
        )


PRESETS = ("tree-index", "block-cache", "two-tier-cache", "uniform-micro")


def preset(name: str, hops: int = DEFAULT_HOPS) -> WorkloadProfile:
    """Named profile.

    tree-index: fixed-depth index walk, then one value read.
    block-cache: key scan inside a block; 67% of reads hit the block cache.
    two-tier-cache: 34% tier-1 hits, then 73% of the rest found on flash
    with one IO; misses also cost one IO (a negative lookup).
    uniform-micro: the fixed-shape microbenchmark, ``hops`` hops then one IO.

    Hop counts are illustrative configuration (``hops``), not measurements.
    """
    key = name.strip().lower().replace("_", "-")
    if key == "tree-index":
        return WorkloadProfile(key, Fixed(hops), FixedIOs(1))
    if key == "block-cache":
        return WorkloadProfile(key, Fixed(hops), HitRatio(0.67))
    if key == "two-tier-cache":
        return WorkloadProfile(key, Fixed(hops), TwoTier(0.34, 0.73))
    if key == "uniform-micro":
        return WorkloadProfile(key, Fixed(hops), FixedIOs(1))
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def aggregate_to_model(profile: WorkloadProfile, base: OperationModelParams) -> OperationModelParams:
    """Per-IO M and mean S so that S * M equals the mean hops per operation."""
    s = profile.mean_ios
    if not s > 0:
        raise ValueError(f"profile {profile.name!r} has zero mean IO count; the per-IO model needs S > 0")
    return base.replace(m_accesses=profile.mean_hops / s, s_ios=s)


def to_sim_config(profile: WorkloadProfile, cfg: SimConfig) -> SimConfig:
    """Simulator config that draws each operation's shape from the profile."""
    return cfg.replace(m_distribution=profile.hops_per_op, io_count=profile.io_count_model)
