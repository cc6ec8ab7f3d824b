"""Normalized throughput against memory latency for every model variant.

Writes a plot-ready CSV: one row per (latency, variant).
"""
import argparse
import sys

from kvlat.model import Variant
from kvlat.sweep import run, spec_from_dict, to_csv

LATENCIES_US = [0.1, 0.3, 0.5, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=float, default=10, help="memory hops per IO")
    ap.add_argument("--p", type=int, default=10, help="prefetch queue depth")
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args(argv)
    spec = spec_from_dict({
        "params": {"m": args.m, "p": args.p},
        "axes": {"l_mem_us": LATENCIES_US},
        "variants": [v.value for v in Variant],
    })
    text = to_csv(run("model", spec))
    if args.out:
        with open(args.out, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
