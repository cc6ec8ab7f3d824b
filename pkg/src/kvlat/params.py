"""Parameter types shared by the analytical model, the simulator and the CLI.

All durations are in seconds, sizes in bytes, rates in bytes/s or ops/s.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

US = 1e-6
NS = 1e-9


@dataclass(frozen=True)
class OperationModelParams:
    """Per-core timing and shape of one KV operation.

    Defaults are the illustrative values used for the throughput curves:
    0.1us memory suboperations, 4us/3us pre/post IO work, 50ns context
    switches, a prefetch queue of 10 and 10 memory hops per IO.
    """

    t_mem: float = 0.1e-6
    t_sw: float = 0.05e-6
    t_io_pre: float = 4e-6
    t_io_post: float = 3e-6
    l_mem: float = 0.1e-6
    l_io: float = 80e-6
    n_threads: int = 256
    prefetch_depth: int = 10
    m_accesses: float = 10.0
    s_ios: float = 1.0

    def __post_init__(self):
        for name in ("t_mem", "t_sw", "t_io_pre", "t_io_post", "l_mem", "l_io"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite duration >= 0, got {v!r}")
        if int(self.n_threads) != self.n_threads or self.n_threads < 1:
            raise ValueError(f"n_threads must be an integer >= 1, got {self.n_threads!r}")
        if int(self.prefetch_depth) != self.prefetch_depth or self.prefetch_depth < 1:
            raise ValueError(f"prefetch_depth must be an integer >= 1, got {self.prefetch_depth!r}")
        if not self.m_accesses > 0:
            raise ValueError(f"m_accesses must be > 0, got {self.m_accesses!r}")
        if not self.s_ios > 0:
            raise ValueError(f"s_ios must be > 0, got {self.s_ios!r}")

    def replace(self, **changes) -> OperationModelParams:
        return dataclasses.replace(self, **changes)

    def with_latency(self, l_mem: float) -> OperationModelParams:
        return dataclasses.replace(self, l_mem=l_mem)


@dataclass(frozen=True)
class SystemParams:
    """Device limits and memory tiering knobs.

    ``math.inf`` for a bandwidth or IOPS field means the limit is absent.
    """

    a_mem: float = 64.0
    b_mem: float = math.inf
    a_io: float = 4096.0
    b_io: float = math.inf
    r_io: float = math.inf
    rho: float = 1.0
    epsilon: float = 0.0
    l_dram: float = 0.1e-6

    def __post_init__(self):
        for name in ("a_mem", "a_io", "b_mem", "b_io", "r_io"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be > 0, got {v!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho!r}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon!r}")
        if not (self.l_dram >= 0 and math.isfinite(self.l_dram)):
            raise ValueError(f"l_dram must be a finite duration >= 0, got {self.l_dram!r}")

    @classmethod
    def testbed(cls) -> SystemParams:
        """Limits of the evaluation machine: 10 GB/s memory and SSD, 2.2 MIOPS."""
        return cls(a_mem=64.0, b_mem=10e9, a_io=1024.0, b_io=10e9, r_io=2.2e6)

    @property
    def unbounded(self) -> bool:
        return (
            math.isinf(self.b_mem)
            and math.isinf(self.b_io)
            and math.isinf(self.r_io)
            and self.rho == 1.0
            and self.epsilon == 0.0
        )

    def replace(self, **changes) -> SystemParams:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class CprParams:
    """Inputs of the cost-performance ratio.

    c: cost share of the replaced DRAM in the whole server, b: bit cost of
    the secondary memory relative to DRAM, d: throughput degradation.
    """

    c: float
    b: float
    d: float

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must be in (0, 1), got {self.c!r}")
        if not 0.0 < self.b <= 1.0:
            raise ValueError(f"b must be in (0, 1], got {self.b!r}")
        if not 0.0 <= self.d < 1.0:
            raise ValueError(f"d must be in [0, 1), got {self.d!r}")
