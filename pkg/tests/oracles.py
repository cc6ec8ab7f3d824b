"""Independent reference computations used by the tests.

None of these call into the package's model code.
"""
from __future__ import annotations

import numpy as np

MEM, PRE, POST, RELOAD = 0, 1, 2, 3


def window_stats(p, n_subops: int, seed: int, epsilon: float = 0.0,
                 latency_by_j=None, reload_time=None):
    """Sample a suboperation stream and measure per-window prefetch waits.

    Suboperations are i.i.d.: memory with probability M/(M+2), pre-IO and
    post-IO with 1/(M+2) each; a memory hop is a reload (its line was
    evicted) with probability ``epsilon``.  Kept memory hops and pre-IOs take
    a prefetch slot; window i is slot takers iP .. iP+P-1.  Post-IOs and
    reloads in the P+1 gaps around a window (before its first taker, between
    takers, after its last) are its insertions, so gaps at window edges
    count for both neighbours.  j is the number of pre-IOs among the takers.

    ``latency_by_j[j]`` is the latency a window with j pre-IOs must hide
    (default l_mem); each reload shortens the wait by ``reload_time + t_sw``.
    Returns per-window arrays (wait, length) with length = P + insertions.
    """
    M, P = p.m_accesses, p.prefetch_depth
    rng = np.random.default_rng(seed)
    probs = np.array([(1 - epsilon) * M, 1.0, 1.0, epsilon * M]) / (M + 2)
    cat = rng.choice(4, size=n_subops, p=probs)

    takers = np.flatnonzero((cat == MEM) | (cat == PRE))
    posts_before = np.cumsum(cat == POST)[takers]
    reloads_before = np.cumsum(cat == RELOAD)[takers]
    is_pre = (cat[takers] == PRE).astype(np.int64)

    # the taker after each window closes its trailing gap
    n_win = (len(takers) - 1) // P
    first = np.arange(1, n_win) * P  # window 0 has no taker before it; skip it
    nxt = first + P
    k = posts_before[nxt] - posts_before[first - 1]
    q = reloads_before[nxt] - reloads_before[first - 1]
    j = np.add.reduceat(is_pre[: n_win * P], np.arange(n_win) * P)[1:]

    if latency_by_j is None:
        lat = np.full(len(j), p.l_mem)
    else:
        lat = np.asarray(latency_by_j)[j]
    rt = p.l_mem if reload_time is None else reload_time
    c = p.t_mem + p.t_sw
    w = (lat - P * c - j * (p.t_io_pre - p.t_mem) - k * (p.t_io_post + p.t_sw)
         - q * (rt + p.t_sw))
    return np.maximum(w, 0.0), P + k + q


def ratio_with_error(w, length, batches: int = 50) -> tuple[float, float]:
    """sum(w)/sum(length) and a batch-means standard error of it."""
    est = w.sum() / length.sum()
    n = len(w) // batches * batches
    ratios = w[:n].reshape(batches, -1).sum(1) / length[:n].reshape(batches, -1).sum(1)
    return float(est), float(ratios.std(ddof=1) / np.sqrt(batches))


def mc_expected_wait(p, n_subops: int = 10_000_000, seed: int = 0, streams: int = 1,
                     **kw) -> tuple[float, float]:
    """Mean wait per suboperation over sampled windows, with its standard error.

    ``streams`` independent streams of ``n_subops`` each are pooled, which
    keeps memory bounded for large sample counts.
    """
    parts = [window_stats(p, n_subops, seed * 1000 + i if streams > 1 else seed, **kw)
             for i in range(streams)]
    w = np.concatenate([a for a, _ in parts])
    length = np.concatenate([b for _, b in parts])
    return ratio_with_error(w, length)
