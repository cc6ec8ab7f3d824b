"""Load stall histogram with and without premature eviction of prefetched lines.

Prints log10 bucket counts so the spike at the full memory latency stands out.
"""
import argparse

from kvlat.params import OperationModelParams, SystemParams
from kvlat.sim import SimConfig, run_simulation

US = 1e-6


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--l-mem-us", type=float, default=5.0)
    ap.add_argument("--threads", type=int, default=64)
    ap.add_argument("--epsilon", type=float, action="append")
    ap.add_argument("--measure-ops", type=int, default=20000)
    args = ap.parse_args(argv)
    p = OperationModelParams(n_threads=args.threads).with_latency(args.l_mem_us * US)
    for eps in args.epsilon or [0.0, 0.05]:
        r = run_simulation(SimConfig(params=p, system=SystemParams(epsilon=eps), measure_ops=args.measure_ops))
        h = r.load_latency_histogram
        print(f"epsilon={eps}: {h.total} loads, full-latency share "
              f"{h.fraction_at(args.l_mem_us * US):.4f}, throughput {r.throughput:.0f} ops/s")
        logs = h.log_counts()
        for i, c in enumerate(h.counts):
            if c:
                lo = i * h.bucket_width / US
                print(f"  [{lo:5.1f}, {lo + h.bucket_width / US:5.1f}) us  log10 count {logs[i]:5.2f}")

if __name__ == "__main__":
    main()
