"""Command-line front end: model curves, simulations, sweeps, model-vs-sim checks, CPR.

Exit status: 0 on success, 1 on a usage or configuration error, 2 when
``compare`` finds the probabilistic model outside the configured band.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys

from . import __version__
from .model import CPR_MEDIA, DEFAULT_DRAM_SHARE, CprParams, TruncationError, cpr, cpr_range
from .sweep import (
    SweepSpec,
    canonical_axis,
    run,
    spec_from_dict,
    summarize,
    to_csv,
    to_json,
    within_band,
)

EXIT_OK, EXIT_USAGE, EXIT_BAND = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _axis(text: str) -> tuple[str, list[float]]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"axis must look like name=v1,v2,..., got {text!r}")
    name, values = text.split("=", 1)
    return name.strip(), _floats(values)


# override flag -> config section it belongs to
_PARAM_FLAGS = {
    "l_mem_us": "params", "t_mem_us": "params", "t_sw_us": "params",
    "t_io_pre_us": "params", "t_io_post_us": "params", "l_io_us": "params",
    "m": "params", "s": "params", "p": "params", "n": "params",
    "rho": "system", "epsilon": "system", "l_dram_us": "system",
    "a_mem": "system", "b_mem": "system", "a_io": "system", "b_io": "system", "r_io": "system",
}


def _add_common(ap: argparse.ArgumentParser, sim: bool) -> None:
    ap.add_argument("--config", help="JSON config file; flags override its values")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    ap.add_argument("--baseline-latency", type=float, metavar="US",
                    help="latency the normalized column is relative to, in us")
    ap.add_argument("--tail-tol", type=float, help="probability mass left out of the wait sum")
    ap.add_argument("--variants", help="comma list, e.g. mask_only,probabilistic")
    ap.add_argument("--axis", action="append", type=_axis, default=[], metavar="NAME=V1,V2",
                    help="grid axis; durations with a _us suffix are in microseconds")
    ap.add_argument("--max-points", type=int, help="cap on the grid size")
    ap.add_argument("--workload", help="preset name or path to a JSON profile")
    for flag in _PARAM_FLAGS:
        ap.add_argument("--" + flag.replace("_", "-"), type=float, dest=flag)
    if sim:
        ap.add_argument("--threads", type=_ints, help="thread counts to try per point")
        ap.add_argument("--hops", help="fixed, geometric or uniform:LO,HI")
        ap.add_argument("--phasing", choices=("staggered", "aligned", "staggered-delay"))
        ap.add_argument("--measure-ops", type=int)
        ap.add_argument("--warmup-ops", type=int)
        ap.add_argument("--prefetch-full", choices=("block", "defer"))
        ap.add_argument("--band", type=_floats, help="allowed error range LO,HI as fractions")
        ap.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kvlat", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"kvlat {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_common(sub.add_parser("model", help="evaluate model variants over a grid"), sim=False)
    _add_common(sub.add_parser("sim", help="simulate every grid point with the best thread count"), sim=True)
    _add_common(sub.add_parser("sweep", help="model and simulator side by side"), sim=True)
    _add_common(sub.add_parser("compare", help="relative model error against the simulator"), sim=True)
    c = sub.add_parser("cpr", help="cost-performance ratio")
    c.add_argument("--c", type=float, default=DEFAULT_DRAM_SHARE, help="replaced DRAM cost share")
    c.add_argument("--b", type=_floats, help="bit cost(s) relative to DRAM")
    c.add_argument("--d", type=_floats, help="throughput degradation(s)")
    c.add_argument("--out")
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    return ap


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as f:
        d = json.load(f)
    if not isinstance(d, dict):
        raise ValueError("config must be a JSON object")
    return d


def spec_from_args(args: argparse.Namespace, sim: bool) -> SweepSpec:
    d = _load_config(args.config)
    d.setdefault("params", {})
    d.setdefault("system", {})
    for flag, section in _PARAM_FLAGS.items():
        v = getattr(args, flag)
        if v is None:
            continue
        key, _ = canonical_axis(flag)
        # drop any spelling of the same field from the file before overriding
        d[section] = {k: x for k, x in d[section].items() if canonical_axis(k)[0] != key}
        d[section][flag] = v
    if args.axis:
        axes = dict(d.get("axes", {}))
        for name, values in args.axis:
            key, _ = canonical_axis(name)
            axes = {k: v for k, v in axes.items() if canonical_axis(k)[0] != key}
            axes[name] = values
        d["axes"] = axes
    if args.variants:
        d["variants"] = [v for v in args.variants.split(",") if v.strip()]
    for attr, key in (("format", "format"), ("seed", "seed"), ("tail_tol", "tail_tol"),
                      ("max_points", "max_points"), ("out", "output")):
        if getattr(args, attr) is not None:
            d[key] = getattr(args, attr)
    if args.baseline_latency is not None:
        d.pop("baseline_latency", None)
        d["baseline_latency_us"] = args.baseline_latency
    if args.workload:
        w = args.workload
        d["workload"] = _load_config(w) if w.endswith(".json") else w
    if sim:
        d["include_sim"] = True
        if args.threads:
            d["thread_grid"] = args.threads
        if args.band:
            if len(args.band) != 2:
                raise ValueError("--band needs exactly two values LO,HI")
            d["band"] = args.band
        so = dict(d.get("sim", {}))
        for attr in ("hops", "phasing", "measure_ops", "warmup_ops", "prefetch_full"):
            if getattr(args, attr) is not None:
                so[attr] = getattr(args, attr)
        d["sim"] = so
    return spec_from_dict(d)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _metadata(command: str, spec: SweepSpec) -> dict:
    return {"tool": "kvlat", "version": __version__, "command": command, "seed": spec.seed,
            "points": spec.size}


def _cmd_grid(command: str, args: argparse.Namespace) -> int:
    sim = command != "model"
    spec = spec_from_args(args, sim)
    rows = run(command, spec, jobs=getattr(args, "jobs", 1))
    summary = summarize(rows) if command == "compare" else None
    if spec.format == "csv":
        text = to_csv(rows)
    else:
        text = to_json(rows, _metadata(command, spec), summary)
    _emit(text, spec.output)
    if summary is None:
        return EXIT_OK
    lo, hi = spec.band
    for variant, s in summary.items():
        print(f"{variant}: min {s['min']:+.4f} max {s['max']:+.4f} mean {s['mean']:+.4f} "
              f"over {s['points']} points", file=sys.stderr)
    if not within_band(summary, spec.band):
        print(f"probabilistic model left the band [{lo:+.3f}, {hi:+.3f}]", file=sys.stderr)
        return EXIT_BAND
    return EXIT_OK


def _cmd_cpr(args: argparse.Namespace) -> int:
    if args.b is None and args.d is None:
        rows = []
        for name, r in CPR_MEDIA.items():
            lo, hi = cpr_range(args.c, r["b"], r["d"])
            rows.append({"medium": name, "c": args.c, "b_min": r["b"][0], "b_max": r["b"][1],
                         "d_min": r["d"][0], "d_max": r["d"][1], "cpr_min": lo, "cpr_max": hi})
    else:
        if args.b is None or args.d is None:
            raise ValueError("give both --b and --d, or neither for the media table")
        rows = [{"c": args.c, "b": b, "d": dd, "cpr": cpr(CprParams(args.c, b, dd))}
                for b, dd in itertools.product(args.b, args.d)]
    text = to_csv(rows) if args.format == "csv" else to_json(rows)
    _emit(text, args.out)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "cpr":
            return _cmd_cpr(args)
        return _cmd_grid(args.command, args)
    except (ValueError, OSError, TruncationError) as e:
        print(f"kvlat: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
