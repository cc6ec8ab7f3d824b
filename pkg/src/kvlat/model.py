"""Closed-form throughput models for memory-hop + IO operations.

Every function returns a *reciprocal* throughput (seconds of core time per
operation) unless its name says otherwise.  Memory-only variants model one
memory access per operation; memory-and-IO variants model ``m_accesses``
hops followed by one asynchronous IO.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .params import US, CprParams, OperationModelParams, SystemParams

DEFAULT_TAIL_TOL = 1e-12
DEFAULT_MAX_K = 10_000
DEFAULT_BASELINE_LATENCY = 0.1e-6


class TruncationError(RuntimeError):
    """The insertion-count series did not reach the tail tolerance in time."""


class Variant(str, enum.Enum):
    SINGLE = "single"
    MULTI = "multi"
    MEM_PREFETCH_LIMITED = "mem_prefetch_limited"
    MASK_ONLY = "mask_only"
    BEST_CASE = "best_case"
    PROBABILISTIC = "probabilistic"
    EXTENDED = "extended"

    @classmethod
    def parse(cls, name: str | Variant) -> Variant:
        if isinstance(name, cls):
            return name
        key = name.strip().lower().replace("-", "_")
        aliases = {"mask": "mask_only", "prob": "probabilistic", "best": "best_case",
                   "mem": "mem_prefetch_limited", "ext": "extended"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown model variant {name!r}") from None

    @property
    def has_io(self) -> bool:
        return self in (Variant.MASK_ONLY, Variant.BEST_CASE, Variant.PROBABILISTIC, Variant.EXTENDED)


@dataclass(frozen=True)
class ThroughputPrediction:
    variant: Variant
    reciprocal: float
    throughput: float
    normalized: float


def _positive(x: float) -> float:
    if not x > 0:
        raise ValueError(f"non-positive reciprocal ({x!r})")
    return x


# -- memory-only ------------------------------------------------------------

def reciprocal_single(p: OperationModelParams) -> float:
    return _positive(p.t_mem + p.l_mem)


def reciprocal_multi(p: OperationModelParams) -> float:
    return _positive(max(p.t_mem + p.t_sw, (p.t_mem + p.l_mem) / p.n_threads))


def reciprocal_mem_prefetch_limited(p: OperationModelParams) -> float:
    """Multi-threaded memory-only time per access with a bounded prefetch queue."""
    return _positive(max(
        p.t_mem + p.t_sw,
        (p.t_mem + p.l_mem) / p.n_threads,
        p.l_mem / p.prefetch_depth,
    ))


def hidable_latency_mem_only(p: OperationModelParams) -> float:
    return p.prefetch_depth * (p.t_mem + p.t_sw)


# -- memory and IO ----------------------------------------------------------

def io_overhead(p: OperationModelParams) -> float:
    """Core time spent on one IO: submit, complete and the two switches."""
    return p.t_io_pre + p.t_io_post + 2 * p.t_sw


def reciprocal_mask_only(p: OperationModelParams) -> float:
    return _positive(p.m_accesses * reciprocal_mem_prefetch_limited(p) + io_overhead(p))


def reciprocal_best_case(p: OperationModelParams) -> float:
    return _positive(max(
        p.m_accesses * (p.t_mem + p.t_sw) + io_overhead(p),
        p.m_accesses * p.l_mem / p.prefetch_depth,
    ))


def hidable_latency_with_io(p: OperationModelParams) -> float:
    P = p.prefetch_depth
    return P * (p.t_mem + p.t_sw) + P * io_overhead(p) / p.m_accesses


def wait_time(j: int, k: int, p: OperationModelParams) -> float:
    """Prefetch stall closing a window of P slot users (j of them pre-IO) and k post-IOs."""
    _check_jk(j, k, p)
    return max(
        0.0,
        p.l_mem
        - p.prefetch_depth * (p.t_mem + p.t_sw)
        - j * (p.t_io_pre - p.t_mem)
        - k * (p.t_io_post + p.t_sw),
    )


def sequence_probability(j: int, k: int, p: OperationModelParams) -> float:
    """Weight of a window with j pre-IOs among P slot users and k post-IO insertions.

    Evaluated in log space; P + k routinely exceeds what factorials in double
    precision can hold.
    """
    _check_jk(j, k, p)
    P, M = p.prefetch_depth, p.m_accesses
    logp = (
        gammaln(P + k + 1) - gammaln(P - j + 1) - gammaln(j + 1) - gammaln(k + 1)
        + (P - j) * math.log(M / (M + 2))
        + (j + k) * math.log(1 / (M + 2))
    )
    return float(math.exp(logp))


def _check_jk(j, k, p):
    if not (0 <= j <= p.prefetch_depth) or k < 0 or int(j) != j or int(k) != k:
        raise ValueError(f"need integer 0 <= j <= P and k >= 0, got j={j!r}, k={k!r}")


def _insertion_cutoff(P: int, s: float, tail_tol: float, max_k: int) -> int:
    """Smallest n with P(insertions > n) < tail_tol.

    Summed over slot-user types, the window weights in the insertion count n
    are proportional to a negative binomial with P + 1 successes and
    insertion probability s.
    """
    if s <= 0:
        return 0
    dist = stats.nbinom(P + 1, 1.0 - s)
    n = int(max(0.0, dist.isf(tail_tol)))
    while n > 0 and dist.sf(n - 1) < tail_tol:
        n -= 1
    while dist.sf(n) >= tail_tol:
        n += 1
        if n > max_k:
            break
    if n > max_k:
        raise TruncationError(
            f"insertion series needs more than {max_k} terms for tail_tol={tail_tol:g}"
        )
    return n


def _window_wait(
    p: OperationModelParams,
    latency_by_j: np.ndarray,
    eps: float,
    demand_latency: float,
    tail_tol: float,
    max_k: int,
) -> float:
    """Expected stall per suboperation, ratio-of-expectations form.

    Four suboperation kinds: prefetched memory hop and pre-IO (both take a
    prefetch slot), post-IO and post-eviction reload (both inserted without
    taking a slot).  With ``eps == 0`` the reload kind is dropped entirely.
    """
    if not 0 < tail_tol < 1:
        raise ValueError(f"tail_tol must be in (0, 1), got {tail_tol!r}")
    P, M = p.prefetch_depth, p.m_accesses
    pa = (1.0 - eps) * M / (M + 2)
    pb = 1.0 / (M + 2)
    pc = 1.0 / (M + 2)
    pe = eps * M / (M + 2)
    n_max = _insertion_cutoff(P, pc + pe, tail_tol, max_k)

    j = np.arange(P + 1, dtype=float)[:, None, None]
    k = np.arange(n_max + 1, dtype=float)[None, :, None]
    q = np.arange(n_max + 1 if eps > 0 else 1, dtype=float)[None, None, :]

    with np.errstate(divide="ignore"):
        logw = (
            gammaln(P + k + q + 1) - gammaln(P - j + 1) - gammaln(j + 1)
            - gammaln(k + 1) - gammaln(q + 1)
            + (P - j) * np.log(pa) + j * np.log(pb) + k * np.log(pc)
        )
        if eps > 0:
            logw = logw + q * np.log(pe)
    weight = np.exp(logw)
    if eps > 0:
        weight = np.where(k + q <= n_max, weight, 0.0)

    lat = np.asarray(latency_by_j, dtype=float)[:, None, None]
    wait = np.maximum(
        0.0,
        lat
        - P * (p.t_mem + p.t_sw)
        - j * (p.t_io_pre - p.t_mem)
        - k * (p.t_io_post + p.t_sw)
        - q * (demand_latency + p.t_sw),
    )
    num = float(np.sum(weight * wait))
    den = float(np.sum(weight * (P + k + q)))
    return num / den


def expected_wait_per_subop(
    p: OperationModelParams,
    tail_tol: float = DEFAULT_TAIL_TOL,
    max_k: int = DEFAULT_MAX_K,
) -> float:
    lat = np.full(p.prefetch_depth + 1, p.l_mem)
    return _window_wait(p, lat, 0.0, p.l_mem, tail_tol, max_k)


def reciprocal_probabilistic(
    p: OperationModelParams,
    tail_tol: float = DEFAULT_TAIL_TOL,
    max_k: int = DEFAULT_MAX_K,
) -> float:
    w = expected_wait_per_subop(p, tail_tol, max_k)
    M = p.m_accesses
    return _positive(M * (p.t_mem + p.t_sw) + io_overhead(p) + (M + 2) * w)


# -- extended model ---------------------------------------------------------

def tiered_latency(p: OperationModelParams, s: SystemParams) -> float:
    """Access-frequency weighted latency of secondary memory and DRAM."""
    return s.rho * p.l_mem + (1 - s.rho) * s.l_dram


def effective_memory_latency(j: int, p: OperationModelParams, s: SystemParams) -> float:
    if not 0 <= j <= p.prefetch_depth:
        raise ValueError(f"need 0 <= j <= P, got j={j!r}")
    return max(tiered_latency(p, s), (p.prefetch_depth - j) * s.a_mem / s.b_mem)


def demand_fetch_latency(p: OperationModelParams, s: SystemParams) -> float:
    """Latency of a single reload after premature eviction."""
    return max(tiered_latency(p, s), s.a_mem / s.b_mem)


def reciprocal_revised(
    p: OperationModelParams,
    s: SystemParams,
    tail_tol: float = DEFAULT_TAIL_TOL,
    max_k: int = DEFAULT_MAX_K,
) -> float:
    """Probabilistic model with tiering, memory bandwidth and eviction folded in."""
    P, M = p.prefetch_depth, p.m_accesses
    lat = np.array([effective_memory_latency(j, p, s) for j in range(P + 1)])
    eps = s.epsilon
    demand = demand_fetch_latency(p, s)
    w = _window_wait(p, lat, eps, demand, tail_tol, max_k)
    if eps == 0:
        busy = M * (p.t_mem + p.t_sw)
    else:
        busy = M * ((1 - eps) * (p.t_mem + p.t_sw) + eps * (demand + p.t_sw))
    return _positive(busy + io_overhead(p) + (M + 2) * w)


def io_device_floor(s: SystemParams) -> float:
    """Per-IO time floor from SSD bandwidth and IOPS; 0 when both are unbounded."""
    return max(s.a_io / s.b_io, 1.0 / s.r_io)


def reciprocal_extended(
    p: OperationModelParams,
    s: SystemParams,
    tail_tol: float = DEFAULT_TAIL_TOL,
    max_k: int = DEFAULT_MAX_K,
) -> float:
    return max(reciprocal_revised(p, s, tail_tol, max_k), s.a_io / s.b_io, 1.0 / s.r_io)


# -- dispatch and derived quantities ----------------------------------------

def reciprocal(
    variant: Variant | str,
    p: OperationModelParams,
    s: SystemParams | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> float:
    """Reciprocal throughput of one operation (one IO for the IO variants)."""
    v = Variant.parse(variant)
    if v is Variant.SINGLE:
        return reciprocal_single(p)
    if v is Variant.MULTI:
        return reciprocal_multi(p)
    if v is Variant.MEM_PREFETCH_LIMITED:
        return reciprocal_mem_prefetch_limited(p)
    if v is Variant.MASK_ONLY:
        return reciprocal_mask_only(p)
    if v is Variant.BEST_CASE:
        return reciprocal_best_case(p)
    if v is Variant.PROBABILISTIC:
        return reciprocal_probabilistic(p, tail_tol)
    return reciprocal_extended(p, s if s is not None else SystemParams(), tail_tol)


def reciprocal_multi_io(
    variant: Variant | str,
    p: OperationModelParams,
    s: SystemParams | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
    m_total: float | None = None,
) -> float:
    """Reciprocal per KV operation issuing ``p.s_ios`` IOs on average.

    The operation is split into S one-IO pieces of M/S hops each.  If
    ``m_total`` is given it is the per-operation hop count and is divided by
    S; otherwise ``p.m_accesses`` is taken to be per-IO already.
    """
    S = p.s_ios
    per_io = p if m_total is None else p.replace(m_accesses=m_total / S)
    return S * reciprocal(variant, per_io, s, tail_tol)


def normalized_degradation(
    variant: Variant | str,
    p: OperationModelParams,
    s: SystemParams | None = None,
    l_baseline: float = DEFAULT_BASELINE_LATENCY,
    l_eval: float | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> float:
    """1 - throughput(l_eval) / throughput(l_baseline); l_eval defaults to p.l_mem."""
    if l_eval is None:
        l_eval = p.l_mem
    if l_baseline < 0 or l_eval < 0:
        raise ValueError("latencies must be >= 0")
    base = reciprocal(variant, p.with_latency(l_baseline), s, tail_tol)
    ev = reciprocal(variant, p.with_latency(l_eval), s, tail_tol)
    return 1.0 - base / ev


def predict(
    variant: Variant | str,
    p: OperationModelParams,
    s: SystemParams | None = None,
    baseline_latency: float = DEFAULT_BASELINE_LATENCY,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> ThroughputPrediction:
    v = Variant.parse(variant)
    rec = reciprocal_multi_io(v, p, s, tail_tol) if v.has_io else reciprocal(v, p, s, tail_tol)
    if v.has_io:
        base = reciprocal_multi_io(v, p.with_latency(baseline_latency), s, tail_tol)
    else:
        base = reciprocal(v, p.with_latency(baseline_latency), s, tail_tol)
    return ThroughputPrediction(v, rec, 1.0 / rec, base / rec)


def cpr(c: CprParams) -> float:
    """Cost-performance of the system with secondary memory relative to DRAM-only."""
    return (1.0 - c.d) / (c.c * c.b + (1.0 - c.c))


# Bit cost and degradation ranges of two candidate media.
CPR_MEDIA = {
    "compressed-dram": {"b": (1 / 3, 1 / 2), "d": (0.0, 0.02)},
    "low-latency-flash": {"b": (0.15, 0.2), "d": (0.02, 0.19)},
}
DEFAULT_DRAM_SHARE = 0.4  # half the server cost is DRAM, 80% of it replaced


def cpr_range(c: float, b_range: tuple, d_range: tuple) -> tuple[float, float]:
    """(worst, best) CPR over a box of bit costs and degradations.

    CPR falls in both b and d, so the extremes sit on opposite corners.
    """
    (b_lo, b_hi), (d_lo, d_hi) = b_range, d_range
    return cpr(CprParams(c, b_hi, d_hi)), cpr(CprParams(c, b_lo, d_lo))


def plateau_crossover(
    p: OperationModelParams,
    s: SystemParams,
    lo: float = 0.0,
    hi: float = 100 * US,
    rtol: float = 1e-6,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> float:
    """Largest latency at which the extended model still sits on its low-latency plateau.

    The plateau is the extended reciprocal at ``lo``; bisection finds where it
    first rises by more than ``rtol`` (relative).  Returns ``hi`` if it never does.
    """
    flat = reciprocal_extended(p.with_latency(lo), s, tail_tol)

    def above(x):
        return reciprocal_extended(p.with_latency(x), s, tail_tol) > flat * (1 + rtol)

    if not above(hi):
        return hi
    a, b = lo, hi
    while b - a > 1e-4 * US:
        mid = 0.5 * (a + b)
        if above(mid):
            b = mid
        else:
            a = mid
    return a
