"""Model against simulator over the reduced acceptance grid.

Prints the per-variant error range and writes the per-point rows as CSV.
Takes several minutes on one core; ``--jobs`` spreads points over processes.
"""
import argparse
import json
import os
from pathlib import Path

from kvlat.sweep import run, spec_from_dict, summarize, to_csv

# same grid as `kvlat compare --config scripts/reduced_grid.json`
REDUCED_GRID = json.loads((Path(__file__).parent / "reduced_grid.json").read_text())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--seed", type=int, default=REDUCED_GRID["seed"])
    ap.add_argument("--out", default="acceptance_grid.csv")
    args = ap.parse_args(argv)
    spec = spec_from_dict({**REDUCED_GRID, "seed": args.seed})
    rows = run("compare", spec, jobs=args.jobs)
    with open(args.out, "w", newline="") as f:
        f.write(to_csv(rows))
    for variant, s in summarize(rows).items():
        print(f"{variant:14s} min {s['min']:+.4f} max {s['max']:+.4f} mean {s['mean']:+.4f} ({s['points']} points)")
    worst = min((r for r in rows if r["variant"] == "mask_only"), key=lambda r: r["error"])
    print(f"mask-only worst underestimate {worst['error']:+.4f} at l_mem={worst['l_mem_s']:.1e}s, "
          f"M={worst['m_accesses']:g}")


if __name__ == "__main__":
    main()
