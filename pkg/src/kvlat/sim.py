"""Event-driven simulation of one CPU core running cooperative user-level threads.

Each thread repeatedly runs one KV operation: a chain of dependent memory
hops, each prefetched before yielding, followed by an asynchronous IO.  The
core runs one thread at a time and picks the next one in FIFO order.  The
core is the only actor that advances time, so the simulation is a loop over
scheduling decisions; memory, prefetch-queue and IO completions are
timestamps computed when a request is issued.

Machine rules:

* memory hop: compute ``t_mem``, issue a prefetch for the next line, switch
  (``t_sw``).  The next suboperation of that thread first loads the line and
  the core idles until it arrives.
* the prefetch queue has ``P`` slots and a prefetch holds its slot until its
  data is delivered.  When all slots are busy, ``prefetch_full="block"``
  (default) stalls the core at the issue until the earliest slot frees;
  ``"defer"`` lets the core move on and starts the prefetch once a slot frees.
* with probability ``epsilon`` a prefetched line is evicted before use; the
  load then waits a full demand fetch (no prefetch slot used).
* pre-IO: load the last line, compute ``t_io_pre``, submit, switch.
  post-IO: if the IO is still in flight, switch again (a poll); otherwise
  compute ``t_io_post`` and switch.
* bounded memory bandwidth spaces line deliveries ``a_mem / b_mem`` apart;
  bounded SSD bandwidth/IOPS spaces IO completions likewise.

Time is integer picoseconds so that event ordering is exact.
"""
from __future__ import annotations

import bisect
import dataclasses
import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .distributions import Fixed, FixedIOs, HitRatio, HopDistribution, IOCountModel
from .params import OperationModelParams, SystemParams

PS = 1e-12

_MEM, _PRE, _POST, _NEWOP = 0, 1, 2, 3


def _ps(seconds: float) -> int:
    return int(round(seconds / PS))


@dataclass(frozen=True)
class Aligned:
    """All threads start together and stay in lock step."""


@dataclass(frozen=True)
class Staggered:
    """Threads start out of step with each other.

    ``offset="phase"`` (default) starts every thread at a uniformly random
    suboperation of its first operation, so phase is independent of FIFO
    position.  ``offset="delay"`` instead delays each thread's arrival
    uniformly within one mean operation latency; with fixed hop counts the
    FIFO order then mirrors the phase order and neighbours stay in step.
    """

    seed: int | None = None
    offset: str = "phase"

    def __post_init__(self):
        if self.offset not in ("phase", "delay"):
            raise ValueError(f"Staggered offset must be 'phase' or 'delay', got {self.offset!r}")


Phasing = Union[Aligned, Staggered]


@dataclass(frozen=True)
class SimConfig:
    params: OperationModelParams = field(default_factory=OperationModelParams)
    system: SystemParams = field(default_factory=SystemParams)
    m_distribution: HopDistribution | None = None
    io_count: IOCountModel | None = None
    phasing: Phasing = field(default_factory=Staggered)
    io_latency_mixture: tuple[tuple[float, float], ...] | None = None
    warmup_ops: int | None = None
    measure_ops: int = 5000
    seed: int = 0
    trace_prefetches: bool = False
    histogram_bucket: float = 0.1e-6
    prefetch_full: str = "block"

    def __post_init__(self):
        if self.prefetch_full not in ("block", "defer"):
            raise ValueError(f"prefetch_full must be 'block' or 'defer', got {self.prefetch_full!r}")
        if self.measure_ops < 1:
            raise ValueError("measure_ops must be >= 1")
        if self.warmup_ops is not None and self.warmup_ops < 0:
            raise ValueError("warmup_ops must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.io_latency_mixture is not None:
            mix = tuple((float(l), float(w)) for l, w in self.io_latency_mixture)
            if not mix or any(l < 0 or w < 0 for l, w in mix):
                raise ValueError("IO latency mixture needs non-negative (latency, probability) pairs")
            if abs(sum(w for _, w in mix) - 1.0) > 1e-9:
                raise ValueError("IO latency mixture probabilities must sum to 1")
            object.__setattr__(self, "io_latency_mixture", mix)
        if self.histogram_bucket <= 0:
            raise ValueError("histogram_bucket must be > 0")
        if isinstance(self.phasing, Aligned):
            if not isinstance(self.hops, Fixed):
                raise ValueError("Aligned phasing requires a Fixed hop count")
            if self.io_count is not None and not isinstance(self.io_count, FixedIOs):
                raise ValueError("Aligned phasing requires a fixed IO count")

    @property
    def hops(self) -> HopDistribution:
        if self.m_distribution is not None:
            return self.m_distribution
        m = self.params.m_accesses
        if m != int(m):
            raise ValueError(
                f"m_accesses={m} is not an integer; give an explicit m_distribution"
            )
        return Fixed(int(m))

    @property
    def ios(self) -> IOCountModel:
        if self.io_count is not None:
            return self.io_count
        s = self.params.s_ios
        if s == int(s):
            return FixedIOs(int(s))
        if s < 1:
            return HitRatio(1.0 - s)
        raise ValueError(f"s_ios={s} is fractional; give an explicit io_count model")

    @property
    def warmup(self) -> int:
        if self.warmup_ops is not None:
            return self.warmup_ops
        return 10 * self.params.n_threads

    def replace(self, **changes) -> SimConfig:
        return dataclasses.replace(self, **changes)


@dataclass
class LatencyHistogram:
    """Fixed-width histogram of the stall each measured load observed."""

    bucket_width: float
    counts: np.ndarray
    overflow: int = 0
    max_observed: float = 0.0
    sum_observed: float | None = None  # exact total stall; None means use bucket midpoints

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.overflow

    @property
    def edges(self) -> np.ndarray:
        return np.arange(len(self.counts) + 1) * self.bucket_width

    def bucket_of(self, latency: float) -> int:
        return int(_ps(latency) // _ps(self.bucket_width))

    def fraction_at(self, latency: float) -> float:
        """Share of loads in the bucket that contains ``latency``."""
        if self.total == 0:
            return 0.0
        b = self.bucket_of(latency)
        c = int(self.counts[b]) if b < len(self.counts) else self.overflow
        return c / self.total

    def fraction_at_least(self, latency: float) -> float:
        if self.total == 0:
            return 0.0
        b = self.bucket_of(latency)
        return (int(self.counts[b:].sum()) + self.overflow) / self.total

    def probabilities(self) -> np.ndarray:
        return self.counts / max(self.total, 1)

    def log_counts(self) -> np.ndarray:
        """log10 of bucket counts; empty buckets are -inf."""
        with np.errstate(divide="ignore"):
            return np.log10(self.counts.astype(float))

    def mean(self) -> float:
        if self.total == 0:
            return 0.0
        if self.sum_observed is not None:
            return self.sum_observed / self.total
        mids = (np.arange(len(self.counts)) + 0.5) * self.bucket_width
        return float((self.counts * mids).sum() / self.total)


@dataclass
class SimResult:
    ops_completed: int
    sim_time: float
    throughput: float
    stall_time_total: float
    load_latency_histogram: LatencyHistogram
    subop_counts: dict  # measured window only, like every other field
    n_threads: int
    polls: int = 0
    idle_time: float = 0.0
    mean_op_latency: float = 0.0
    mean_in_flight: float = 0.0
    thread_times: list = field(default_factory=list)
    prefetch_trace: list | None = None

    @property
    def stall_share(self) -> float:
        return self.stall_time_total / self.sim_time if self.sim_time > 0 else 0.0


class _Thread:
    __slots__ = (
        "tid", "start", "enq", "skip_busy", "phase", "plan", "seg", "hops_left",
        "seg_io", "line_at", "line_evicted", "line_ends_op", "io_done", "op_start",
        "skip",
    )

    def __init__(self, tid: int, start: int):
        self.tid = tid
        self.start = start
        self.enq = start
        self.skip_busy = 0
        self.phase = _NEWOP
        self.plan: list = []
        self.seg = 0
        self.hops_left = 0
        self.seg_io = False
        self.line_at = -1
        self.line_evicted = False
        self.line_ends_op = False
        self.io_done = 0
        self.op_start = 0
        self.skip = False


def _split_hops(hops: int, ios: int) -> list:
    if ios == 0:
        return [hops]
    base, extra = divmod(hops, ios)
    return [base + (1 if i < extra else 0) for i in range(ios)]


def _core_time_per_op(cfg: SimConfig, with_io: bool) -> float:
    p = cfg.params
    t = cfg.hops.mean * (p.t_mem + p.t_sw)
    if with_io:
        t += cfg.ios.mean * (p.t_io_pre + p.t_io_post + 2 * p.t_sw)
    return t


def _simulate(cfg: SimConfig, with_io: bool) -> SimResult:
    p, s = cfg.params, cfg.system
    N, P = p.n_threads, p.prefetch_depth
    rng = random.Random(cfg.seed)
    rand = rng.random

    t_mem, t_sw = _ps(p.t_mem), _ps(p.t_sw)
    t_pre, t_post = _ps(p.t_io_pre), _ps(p.t_io_post)
    l_sec, l_dram = _ps(p.l_mem), _ps(s.l_dram)
    rho, eps = s.rho, s.epsilon
    block = cfg.prefetch_full == "block"
    mem_gap = 0 if math.isinf(s.b_mem) else _ps(s.a_mem / s.b_mem)
    io_floor = max(s.a_io / s.b_io, 1.0 / s.r_io)
    io_gap = _ps(io_floor)

    mixture = cfg.io_latency_mixture or ((p.l_io, 1.0),)
    io_lats = [_ps(l) for l, _ in mixture]
    io_cum = list(np.cumsum([w for _, w in mixture]))
    io_cum[-1] = 1.0
    single_io_lat = io_lats[0] if len(io_lats) == 1 else None

    draw_hops = cfg.hops.sampler(rng)
    draw_ios = cfg.ios.sampler(rng) if with_io else (lambda: 0)

    def fetch_latency():
        if rho == 1.0:
            return l_sec
        if rho == 0.0:
            return l_dram
        return l_sec if rand() < rho else l_dram

    # threads and their start offsets
    if isinstance(cfg.phasing, Aligned):
        starts = [0] * N
    else:
        srng = random.Random(cfg.phasing.seed if cfg.phasing.seed is not None else cfg.seed ^ 0x5EED)
        if cfg.phasing.offset == "delay":
            span = N * _core_time_per_op(cfg, with_io)
            starts = [_ps(srng.random() * span) for _ in range(N)]
        else:
            starts = [0] * N
    threads = [_Thread(i, st) for i, st in enumerate(starts)]
    if isinstance(cfg.phasing, Staggered) and cfg.phasing.offset == "phase":
        for t in threads:
            t.skip = True
    pending = sorted(threads, key=lambda t: (t.start, t.tid))
    pi = 0

    slots = [0] * P  # heap of slot free times
    mem_last = -(10**30)
    io_last = -(10**30)

    width = _ps(cfg.histogram_bucket)
    max_lat = max(l_sec if rho > 0 else 0, l_dram if rho < 1 else 0, mem_gap)
    nb = int(math.ceil(2 * max(max_lat, width) / width)) + 1
    hist = [0] * nb
    overflow = 0
    max_obs = 0
    obs_sum = 0

    counts = {"memory": 0, "pre_io": 0, "post_io": 0, "evicted_reload": 0}
    polls = 0
    trace = [] if cfg.trace_prefetches else None

    warmup = cfg.warmup
    target = warmup + cfg.measure_ops
    completed = 0
    INF = 10**30
    w0 = 0 if warmup == 0 else INF
    w1 = INF
    # snapshots so reported counts cover the measured window only
    counts_w0, polls_w0 = dict(counts), 0
    counts_w1, polls_w1 = None, 0
    busy = [0] * N
    stall = [0] * N
    queued = [0] * N
    idle = 0
    stall_total = 0
    lat_sum = 0
    lat_n = 0
    inflight = 0
    area = 0
    last_change = 0
    n_post = 0
    ff_min = None  # cached earliest IO completion while every thread polls

    def ov(a, b):
        lo = a if a > w0 else w0
        hi = b if b < w1 else w1
        return hi - lo if hi > lo else 0

    ready = deque()
    now = 0
    while completed < target:
        while pi < N and pending[pi].start <= now:
            ready.append(pending[pi])
            pi += 1
        if not ready:
            nxt = pending[pi].start
            idle += ov(now, nxt)
            now = nxt
            continue
        th = ready.popleft()
        tid = th.tid
        sched = now
        q = ov(th.enq, sched)
        if th.skip_busy:
            q -= th.skip_busy
            th.skip_busy = 0
        queued[tid] += q
        sv = 0

        # consume the line prefetched by this thread's previous hop
        if th.line_at >= 0:
            if th.line_evicted:
                done = now + fetch_latency()
                if mem_gap:
                    if done < mem_last + mem_gap:
                        done = mem_last + mem_gap
                    mem_last = done
                counts["evicted_reload"] += 1
            else:
                done = th.line_at
            obs = 0
            if done > now:
                obs = done - now
                sv += ov(now, done)
                now = done
            if w0 <= now and w1 == INF:
                b = obs // width
                if b < nb:
                    hist[b] += 1
                else:
                    overflow += 1
                if obs > max_obs:
                    max_obs = obs
                obs_sum += obs
            th.line_at = -1
            if th.line_ends_op:
                th.line_ends_op = False
                # op completion
                completed += 1
                if w0 <= now:
                    area += inflight * (now - last_change)
                    last_change = now
                    lat_sum += now - th.op_start
                    lat_n += 1
                inflight -= 1
                if completed == warmup:
                    w0 = now
                    last_change = now
                    counts_w0, polls_w0 = dict(counts), polls
                if completed == target:
                    w1 = now
                    counts_w1, polls_w1 = dict(counts), polls
                th.phase = _NEWOP

        ph = th.phase
        if ph == _NEWOP:
            hops = draw_hops()
            nio = draw_ios()
            if hops == 0 and nio == 0:
                hops = 1
            th.plan = _split_hops(hops, nio)
            th.seg = 0
            th.seg_io = nio > 0
            th.hops_left = th.plan[0]
            th.op_start = now
            if w0 <= now and w1 == INF:
                area += inflight * (now - last_change)
                last_change = now
            inflight += 1
            ph = th.phase = _MEM if th.hops_left > 0 else _PRE
            if th.skip:
                # random starting point inside the first operation
                th.skip = False
                r = int(srng.random() * (hops + 2 * nio))
                while True:
                    h = th.plan[th.seg]
                    if r < h:
                        th.hops_left = h - r
                        ph = _MEM
                        break
                    r -= h
                    th.hops_left = 0
                    if r == 0:
                        ph = _PRE
                        break
                    if r == 1:
                        ph = _POST
                        th.io_done = now
                        n_post += 1
                        ff_min = None
                        break
                    r -= 2
                    th.seg += 1
                th.phase = ph

        if ph == _MEM:
            now += t_mem
            lat = l_sec if rho == 1.0 else fetch_latency()
            start = slots[0]
            if start <= now:
                start = now
            elif block:
                # queue full: the prefetch instruction holds the core until a slot frees
                sv += ov(now, start)
                now = start
            done = start + lat
            if mem_gap:
                if done < mem_last + mem_gap:
                    done = mem_last + mem_gap
                mem_last = done
            heapq.heapreplace(slots, done)
            if trace is not None:
                trace.append((start, done))
            th.line_at = done
            th.line_evicted = eps > 0.0 and rand() < eps
            counts["memory"] += 1
            th.hops_left -= 1
            if th.hops_left == 0:
                if th.seg_io:
                    th.phase = _PRE
                else:
                    th.line_ends_op = True
                    th.phase = _NEWOP
            now += t_sw
        elif ph == _PRE:
            now += t_pre
            if single_io_lat is not None:
                lat = single_io_lat
            else:
                lat = io_lats[bisect.bisect_right(io_cum, rand())] if len(io_lats) > 1 else io_lats[0]
            done = now + lat
            if io_gap:
                if done < io_last + io_gap:
                    done = io_last + io_gap
                io_last = done
            th.io_done = done
            th.phase = _POST
            n_post += 1
            ff_min = None
            counts["pre_io"] += 1
            now += t_sw
        else:  # _POST
            if now < th.io_done:
                polls += 1
                now += t_sw
            else:
                n_post -= 1
                ff_min = None
                now += t_post
                counts["post_io"] += 1
                th.seg += 1
                if th.seg < len(th.plan):
                    th.hops_left = th.plan[th.seg]
                    th.phase = _MEM if th.hops_left > 0 else _PRE
                else:
                    completed += 1
                    if w0 <= now:
                        area += inflight * (now - last_change)
                        last_change = now
                        lat_sum += now - th.op_start
                        lat_n += 1
                    inflight -= 1
                    if completed == warmup:
                        w0 = now
                        last_change = now
                        counts_w0, polls_w0 = dict(counts), polls
                    if completed == target:
                        w1 = now
                        counts_w1, polls_w1 = dict(counts), polls
                    th.phase = _NEWOP
                now += t_sw

        # time accounting for the suboperation just run
        stall[tid] += sv
        stall_total += sv
        busy[tid] += ov(sched, now) - sv
        th.enq = now
        ready.append(th)

        # every thread is polling an unfinished IO: skip whole polling rounds
        if n_post == N and pi == N and th.phase == _POST:
            if ff_min is None:
                ff_min = min(t.io_done for t in threads)
            if ff_min > now:
                if t_sw == 0:
                    now = ff_min
                else:
                    rounds = (ff_min - now) // (N * t_sw) - 1
                    if rounds > 0:
                        dt = rounds * t_sw
                        now += rounds * N * t_sw
                        polls += rounds * N
                        if w0 <= now - rounds * N * t_sw and w1 == INF:
                            for t in threads:
                                busy[t.tid] += dt
                                t.skip_busy += dt

    # close the measurement window
    for t in ready:
        queued[t.tid] += ov(t.enq, w1) - t.skip_busy
        t.skip_busy = 0
    area += inflight * (w1 - last_change) if w1 > last_change else 0
    window = w1 - w0
    sim_time = window * PS
    measured = cfg.measure_ops
    return SimResult(
        ops_completed=measured,
        sim_time=sim_time,
        throughput=measured / sim_time if sim_time > 0 else math.inf,
        stall_time_total=stall_total * PS,
        load_latency_histogram=LatencyHistogram(
            cfg.histogram_bucket, np.array(hist, dtype=np.int64), overflow, max_obs * PS, obs_sum * PS
        ),
        subop_counts={k: counts_w1[k] - counts_w0[k] for k in counts},
        n_threads=N,
        polls=polls_w1 - polls_w0,
        idle_time=idle * PS,
        mean_op_latency=(lat_sum / lat_n) * PS if lat_n else 0.0,
        mean_in_flight=area / window if window > 0 else 0.0,
        thread_times=[(busy[i] * PS, stall[i] * PS, queued[i] * PS) for i in range(N)],
        prefetch_trace=None if trace is None else [(a * PS, b * PS) for a, b in trace],
    )


def run_simulation(cfg: SimConfig) -> SimResult:
    """Simulate memory hops plus asynchronous IO until ``measure_ops`` operations finish."""
    return _simulate(cfg, with_io=True)


def run_memory_only(cfg: SimConfig) -> SimResult:
    """Same machine with the IO segments removed: each operation is its hop chain."""
    return _simulate(cfg, with_io=False)


@dataclass
class ThreadSweep:
    best_n: int
    best: SimResult
    all: list


def sweep_thread_count(
    cfg: SimConfig, n_candidates: Sequence[int], memory_only: bool = False
) -> ThreadSweep:
    """Run every candidate thread count and keep the fastest; ties go to fewer threads."""
    if not n_candidates:
        raise ValueError("need at least one thread-count candidate")
    run = run_memory_only if memory_only else run_simulation
    results = []
    for n in n_candidates:
        results.append(run(cfg.replace(params=cfg.params.replace(n_threads=int(n)))))
    best_i = 0
    for i, r in enumerate(results):
        if r.throughput > results[best_i].throughput or (
            r.throughput == results[best_i].throughput and n_candidates[i] < n_candidates[best_i]
        ):
            best_i = i
    return ThreadSweep(int(n_candidates[best_i]), results[best_i], results)


def default_measure_ops(n_threads: int) -> int:
    """Measured operations long enough that phase groups rotate through many rounds."""
    return max(4000, 40 * int(n_threads))
