"""Throughput against latency under device caps, eviction and tiering.

For each scenario prints the model crossover and a table of extended-model
and simulated throughput, so the plateau-then-decline shape can be read off.
"""
import argparse

from kvlat.model import Variant, plateau_crossover, reciprocal
from kvlat.params import OperationModelParams, SystemParams
from kvlat.sim import SimConfig, run_simulation

US = 1e-6
SCENARIOS = {
    "none": SystemParams(),
    "io-bandwidth": SystemParams(a_io=131072, b_io=131072 / 20e-6),
    "iops": SystemParams(r_io=5e4),
    "memory-bandwidth": SystemParams(b_mem=64 / 3e-6),
    "eviction-5pct": SystemParams(epsilon=0.05),
    "half-offloaded": SystemParams(rho=0.5),
}
LATENCIES_US = [0.1, 1, 2, 3, 5, 8, 12, 16, 20, 25, 30, 40]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int, default=256)
    ap.add_argument("--measure-ops", type=int, default=10000)
    ap.add_argument("--only", choices=sorted(SCENARIOS), action="append")
    args = ap.parse_args(argv)
    p = OperationModelParams(n_threads=args.threads)
    for name in args.only or SCENARIOS:
        s = SCENARIOS[name]
        cross = plateau_crossover(p, s)
        print(f"{name}: model crossover {cross / US:.2f} us")
        print(f"  {'l_mem_us':>8} {'model':>10} {'sim':>10} {'err':>7}")
        for l_us in LATENCIES_US:
            q = p.with_latency(l_us * US)
            model = 1 / reciprocal(Variant.EXTENDED, q, s)
            sim = run_simulation(SimConfig(params=q, system=s, measure_ops=args.measure_ops)).throughput
            print(f"  {l_us:8g} {model:10.0f} {sim:10.0f} {model / sim - 1:+7.3f}")


if __name__ == "__main__":
    main()
