"""Closed-form expected wait against a sampled suboperation stream."""
import numpy as np
import pytest

from kvlat.model import expected_wait_per_subop, reciprocal_revised, reciprocal_probabilistic
from kvlat.params import OperationModelParams, SystemParams

from oracles import mc_expected_wait

US = 1e-6
N_SUBOPS = 10_000_000


def random_params(n: int, seed: int):
    """Random parameter sets whose waits are common enough to estimate to 1%.

    A short pilot run of the oracle itself screens out sets where a wait is
    so rare that 1e7 samples cannot resolve 1%; the model plays no part.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        P = int(rng.integers(2, 17))
        t_mem, t_sw = rng.uniform(0.05, 0.3), rng.uniform(0.02, 0.1)
        floor = P * (t_mem + t_sw)
        p = OperationModelParams(
            t_mem=t_mem * US, t_sw=t_sw * US,
            t_io_pre=rng.uniform(0.5, 6.0) * US, t_io_post=rng.uniform(0.2, 5.0) * US,
            l_mem=(floor + rng.uniform(1.0, 15.0)) * US,
            prefetch_depth=P, m_accesses=float(rng.uniform(1.0, 20.0)),
        )
        est, se = mc_expected_wait(p, 1_000_000, seed=len(out))
        if est > 0 and se / est < 0.006:
            out.append(p)
    return out


PARAM_SETS = random_params(50, seed=2024)


@pytest.mark.parametrize("i", range(len(PARAM_SETS)))
def test_expected_wait_matches_sampled_windows(i):
    p = PARAM_SETS[i]
    est, se = mc_expected_wait(p, N_SUBOPS, seed=1000 + i)
    model = expected_wait_per_subop(p)
    assert se / est < 0.003, "sampling noise too large to resolve 1%"
    assert abs(model - est) / est < 0.01


def test_table_values_at_5us():
    p = OperationModelParams(l_mem=5 * US)
    est, _ = mc_expected_wait(p, N_SUBOPS, seed=1)
    assert abs(expected_wait_per_subop(p) - est) / est < 0.01


def _latency_by_j(p, s):
    tier = s.rho * p.l_mem + (1 - s.rho) * s.l_dram
    return [max(tier, (p.prefetch_depth - j) * s.a_mem / s.b_mem) for j in range(p.prefetch_depth + 1)]


@pytest.mark.parametrize(
    "s, l_us, streams",
    [
        (SystemParams(epsilon=0.05), 10, 4),
        (SystemParams(epsilon=0.2), 12, 8),
        (SystemParams(b_mem=64 / 0.6e-6), 6, 1),
        (SystemParams(rho=0.5, epsilon=0.05), 10, 4),
    ],
    ids=["eps5", "eps20", "membw", "rho-eps"],
)
def test_extended_wait_matches_sampled_windows(s, l_us, streams):
    p = OperationModelParams(l_mem=l_us * US, prefetch_depth=12)
    lat = _latency_by_j(p, s)
    demand = max(s.rho * p.l_mem + (1 - s.rho) * s.l_dram, s.a_mem / s.b_mem)
    est, se = mc_expected_wait(p, N_SUBOPS, seed=11, streams=streams, epsilon=s.epsilon,
                               latency_by_j=lat, reload_time=demand)
    assert se / est < 0.003
    # back the wait out of the reciprocal: busy work plus (M+2) waits
    M, c = p.m_accesses, p.t_mem + p.t_sw
    e = p.t_io_pre + p.t_io_post + 2 * p.t_sw
    busy = M * ((1 - s.epsilon) * c + s.epsilon * (demand + p.t_sw)) if s.epsilon else M * c
    model_wait = (reciprocal_revised(p, s) - busy - e) / (M + 2)
    assert abs(model_wait - est) / est < 0.01


def test_oracle_reduces_to_base_case():
    p = OperationModelParams(l_mem=5 * US)
    a, _ = mc_expected_wait(p, 2_000_000, seed=3)
    b, _ = mc_expected_wait(p, 2_000_000, seed=3, epsilon=0.0, latency_by_j=[p.l_mem] * 11)
    assert a == b
    assert reciprocal_probabilistic(p) > 0
