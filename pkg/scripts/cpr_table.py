"""Cost-performance ratio ranges for the two cheaper-memory media."""
import argparse

from kvlat.model import CPR_MEDIA, DEFAULT_DRAM_SHARE, cpr_range


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=DEFAULT_DRAM_SHARE, help="replaced DRAM cost share")
    args = ap.parse_args(argv)
    print(f"{'medium':20} {'bit cost':>12} {'degradation':>12} {'CPR':>12}")
    for name, r in CPR_MEDIA.items():
        lo, hi = cpr_range(args.c, r["b"], r["d"])
        b, d = r["b"], r["d"]
        print(f"{name:20} {b[0]:5.2f}-{b[1]:<5.2f} {d[0]:5.2f}-{d[1]:<5.2f} {lo:5.2f}-{hi:<5.2f}")


if __name__ == "__main__":
    main()
