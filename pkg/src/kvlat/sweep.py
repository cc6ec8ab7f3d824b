"""Parameter grids over the model and the simulator, with deterministic output.

A ``SweepSpec`` names a baseline parameter set and a set of axes; the grid is
the cartesian product of the axes in the order they were given.  Every grid
point gets its own simulator seed derived from the spec seed and the point
index, so a point's result does not depend on which worker ran it or on the
other points in the grid.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any

import numpy as np

from .distributions import Fixed, Geometric, UniformRange
from .model import DEFAULT_BASELINE_LATENCY, DEFAULT_TAIL_TOL, Variant, predict
from .params import US, OperationModelParams, SystemParams
from .sim import Aligned, SimConfig, Staggered, default_measure_ops, run_simulation
from .workload import WorkloadProfile, aggregate_to_model, preset, to_sim_config

MODEL_FIELDS = tuple(f.name for f in dataclasses.fields(OperationModelParams))
SYSTEM_FIELDS = tuple(f.name for f in dataclasses.fields(SystemParams))
DURATION_FIELDS = {"t_mem", "t_sw", "t_io_pre", "t_io_post", "l_mem", "l_io", "l_dram"}
INT_FIELDS = {"n_threads", "prefetch_depth"}

# short names accepted in configs and on the command line
AXIS_ALIASES = {"m": "m_accesses", "s": "s_ios", "p": "prefetch_depth", "n": "n_threads"}

# CSV column names carry their SI unit
_UNITS = {
    **{f: f + "_s" for f in DURATION_FIELDS},
    "a_mem": "a_mem_bytes",
    "a_io": "a_io_bytes",
    "b_mem": "b_mem_bytes_per_s",
    "b_io": "b_io_bytes_per_s",
    "r_io": "r_io_ops_per_s",
}
INPUT_COLUMNS = tuple(_UNITS.get(f, f) for f in MODEL_FIELDS + SYSTEM_FIELDS)

DEFAULT_MAX_POINTS = 100_000
DEFAULT_THREAD_GRID = (32, 64, 128, 256)


def canonical_axis(name: str) -> tuple[str, float]:
    """Field name and unit scale for an axis or override key.

    ``l_mem_us`` means ``l_mem`` given in microseconds; plain duration names
    are in seconds.
    """
    key = name.strip().lower().replace("-", "_")
    scale = 1.0
    if key.endswith("_us"):
        key, scale = key[:-3], US
    key = AXIS_ALIASES.get(key, key)
    if key not in MODEL_FIELDS and key not in SYSTEM_FIELDS:
        raise ValueError(f"invalid axis name {name!r}")
    if scale != 1.0 and key not in DURATION_FIELDS:
        raise ValueError(f"invalid axis name {name!r}: {key} is not a duration")
    return key, scale


def to_si(value, scale: float) -> float:
    # shift the decimal exponent of the shortest repr, so 0.1 us is exactly the
    # double nearest 1e-7 (multiplying or dividing can land one ulp off)
    if scale == US:
        return float(Decimal(repr(float(value))).scaleb(-6))
    return float(value) * scale


@dataclass(frozen=True)
class SimOptions:
    hops: str = "geometric"  # fixed | geometric | uniform:<lo>,<hi>
    phasing: str = "staggered"  # staggered | aligned | staggered-delay
    measure_ops: int | None = None  # None: default_measure_ops(n)
    warmup_ops: int | None = None
    prefetch_full: str = "block"
    io_latency_mixture: tuple | None = None

    def __post_init__(self):
        if self.phasing not in ("staggered", "aligned", "staggered-delay"):
            raise ValueError(f"unknown phasing {self.phasing!r}")
        if not (self.hops in ("fixed", "geometric") or self.hops.startswith("uniform:")):
            raise ValueError(f"unknown hop distribution {self.hops!r}")


@dataclass(frozen=True)
class SweepSpec:
    params: OperationModelParams = field(default_factory=OperationModelParams)
    system: SystemParams = field(default_factory=SystemParams)
    axes: tuple = ()  # ((field, (v1, v2, ...)), ...) in SI units
    variants: tuple = (Variant.MASK_ONLY, Variant.PROBABILISTIC)
    include_sim: bool = False
    thread_grid: tuple = DEFAULT_THREAD_GRID
    output: str | None = None
    format: str = "csv"
    seed: int = 0
    baseline_latency: float = DEFAULT_BASELINE_LATENCY
    tail_tol: float = DEFAULT_TAIL_TOL
    max_points: int = DEFAULT_MAX_POINTS
    band: tuple = (-0.10, 0.10)
    sim: SimOptions = field(default_factory=SimOptions)
    workload: WorkloadProfile | None = None

    def __post_init__(self):
        axes = []
        for name, values in self.axes:
            key, scale = canonical_axis(name)
            vals = tuple(to_si(v, scale) for v in values)
            if not vals:
                raise ValueError(f"axis {name!r} has no values")
            axes.append((key, vals))
        object.__setattr__(self, "axes", tuple(axes))
        object.__setattr__(self, "variants", tuple(Variant.parse(v) for v in self.variants))
        object.__setattr__(self, "thread_grid", tuple(int(n) for n in self.thread_grid))
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.size > self.max_points:
            raise ValueError(f"grid has {self.size} points, above the cap of {self.max_points}")

    @property
    def size(self) -> int:
        return math.prod(len(v) for _, v in self.axes)

    def points(self) -> list[tuple[OperationModelParams, SystemParams]]:
        names = [k for k, _ in self.axes]
        out = []
        for combo in itertools.product(*(v for _, v in self.axes)):
            mp, sp = {}, {}
            for k, v in zip(names, combo):
                if k in INT_FIELDS:
                    v = int(v)
                (mp if k in MODEL_FIELDS else sp)[k] = v
            out.append((self.params.replace(**mp), self.system.replace(**sp)))
        return out

    def replace(self, **changes) -> SweepSpec:
        return dataclasses.replace(self, **changes)


def point_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for grid point ``index``."""
    words = np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


# -- config files -----------------------------------------------------------

def _fields_from(d: dict, allowed: tuple) -> dict:
    out = {}
    for k, v in d.items():
        key, scale = canonical_axis(k)
        if key not in allowed:
            continue
        v = to_si(v, scale)
        out[key] = int(v) if key in INT_FIELDS else v
    return out


def spec_from_dict(d: dict) -> SweepSpec:
    """Build a spec from a parsed JSON config.

    Durations are seconds unless the key ends in ``_us``.
    """
    known = {"params", "system", "axes", "variants", "include_sim", "thread_grid", "output",
             "format", "seed", "baseline_latency", "baseline_latency_us", "tail_tol",
             "max_points", "band", "sim", "workload"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw: dict[str, Any] = {}
    params = d.get("params", {})
    bad = [k for k in params if canonical_axis(k)[0] not in MODEL_FIELDS]
    if bad:
        raise ValueError(f"not an operation parameter: {bad[0]!r}")
    kw["params"] = OperationModelParams(**_fields_from(params, MODEL_FIELDS))
    system = d.get("system", {})
    bad = [k for k in system if canonical_axis(k)[0] not in SYSTEM_FIELDS]
    if bad:
        raise ValueError(f"not a system parameter: {bad[0]!r}")
    kw["system"] = SystemParams(**_fields_from(system, SYSTEM_FIELDS))
    kw["axes"] = tuple((k, tuple(v)) for k, v in d.get("axes", {}).items())
    for key in ("variants", "thread_grid", "band"):
        if key in d:
            kw[key] = tuple(d[key])
    for key in ("include_sim", "output", "format", "seed", "tail_tol", "max_points"):
        if key in d:
            kw[key] = d[key]
    if "baseline_latency_us" in d:
        kw["baseline_latency"] = to_si(d["baseline_latency_us"], US)
    elif "baseline_latency" in d:
        kw["baseline_latency"] = float(d["baseline_latency"])
    if "sim" in d:
        so = dict(d["sim"])
        if so.get("io_latency_mixture") is not None:
            so["io_latency_mixture"] = tuple(tuple(x) for x in so["io_latency_mixture"])
        kw["sim"] = SimOptions(**so)
    if d.get("workload") is not None:
        w = d["workload"]
        kw["workload"] = preset(w) if isinstance(w, str) else WorkloadProfile.from_dict(w)
    return SweepSpec(**kw)


# -- evaluation -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def input_columns(p: OperationModelParams, s: SystemParams) -> dict:
    row = {}
    for f in MODEL_FIELDS:
        row[_UNITS.get(f, f)] = getattr(p, f)
    for f in SYSTEM_FIELDS:
        row[_UNITS.get(f, f)] = getattr(s, f)
    return row


def _model_params(spec: SweepSpec, p: OperationModelParams) -> OperationModelParams:
    return aggregate_to_model(spec.workload, p) if spec.workload is not None else p


def _hops(spec: SweepSpec, p: OperationModelParams):
    h = spec.sim.hops
    if h == "geometric":
        return Geometric(p.m_accesses)
    if h == "fixed":
        if p.m_accesses != int(p.m_accesses):
            raise ValueError(f"fixed hop count needs an integer M, got {p.m_accesses}")
        return Fixed(int(p.m_accesses))
    lo, hi = (int(x) for x in h.split(":", 1)[1].split(","))
    return UniformRange(lo, hi)


def sim_config(spec: SweepSpec, p: OperationModelParams, s: SystemParams, seed: int) -> SimConfig:
    o = spec.sim
    if o.phasing == "aligned":
        phasing = Aligned()
    else:
        phasing = Staggered(offset="delay" if o.phasing == "staggered-delay" else "phase")
    cfg = SimConfig(
        params=p,
        system=s,
        phasing=phasing,
        m_distribution=None if spec.workload is not None else _hops(spec, p),
        io_latency_mixture=o.io_latency_mixture,
        warmup_ops=o.warmup_ops,
        measure_ops=o.measure_ops or default_measure_ops(p.n_threads),
        seed=seed,
        prefetch_full=o.prefetch_full,
    )
    if spec.workload is not None:
        cfg = to_sim_config(spec.workload, cfg)
    return cfg


def model_rows_for(spec: SweepSpec, index: int, p: OperationModelParams, s: SystemParams) -> list[dict]:
    mp = _model_params(spec, p)
    rows = []
    for v in spec.variants:
        pred = predict(v, mp, s, spec.baseline_latency, spec.tail_tol)
        rows.append({
            "point": index,
            **input_columns(mp, s),
            "variant": v.value,
            "reciprocal_s": pred.reciprocal,
            "throughput_ops_per_s": pred.throughput,
            "normalized": pred.normalized,
        })
    return rows


def sim_row_for(spec: SweepSpec, index: int, p: OperationModelParams, s: SystemParams) -> dict:
    if not spec.thread_grid:
        raise ValueError("thread_grid must not be empty for simulation")
    seed = point_seed(spec.seed, index)
    base = sim_config(spec, p, s, seed)
    best_n, r = None, None
    for n in spec.thread_grid:
        cfg = base.replace(params=p.replace(n_threads=n))
        if spec.sim.measure_ops is None:
            cfg = cfg.replace(measure_ops=default_measure_ops(n))
        res = run_simulation(cfg)
        # ties go to fewer threads
        if r is None or res.throughput > r.throughput or (res.throughput == r.throughput and n < best_n):
            best_n, r = n, res
    h = r.load_latency_histogram
    return {
        "point": index,
        **input_columns(p, s),
        "seed": seed,
        "best_n": best_n,
        "sim_throughput_ops_per_s": r.throughput,
        "stall_share": r.stall_share,
        "mean_load_stall_s": h.mean(),
        "max_load_stall_s": h.max_observed,
        "full_latency_load_fraction": h.fraction_at_least(p.l_mem) if p.l_mem > 0 else 1.0,
        "mean_op_latency_s": r.mean_op_latency,
    }


def _compare_rows(spec: SweepSpec, simrow: dict, p: OperationModelParams, s: SystemParams) -> list[dict]:
    mp = _model_params(spec, p.replace(n_threads=simrow["best_n"]))
    rows = []
    for v in spec.variants:
        pred = predict(v, mp, s, spec.baseline_latency, spec.tail_tol)
        sim_tp = simrow["sim_throughput_ops_per_s"]
        rows.append({
            "point": simrow["point"],
            **input_columns(p, s),
            "variant": v.value,
            "best_n": simrow["best_n"],
            "model_throughput_ops_per_s": pred.throughput,
            "sim_throughput_ops_per_s": sim_tp,
            "error": (pred.throughput - sim_tp) / sim_tp,
        })
    return rows


def _work(args):
    kind, spec, index, p, s = args
    if kind == "model":
        return model_rows_for(spec, index, p, s)
    simrow = sim_row_for(spec, index, p, s)
    if kind == "sim":
        return [simrow]
    if kind == "compare":
        return _compare_rows(spec, simrow, p, s)
    # sweep: model columns folded into the simulator row
    mp = _model_params(spec, p.replace(n_threads=simrow["best_n"]))
    row = dict(simrow)
    for v in spec.variants:
        row[f"{v.value}_throughput_ops_per_s"] = predict(
            v, mp, s, spec.baseline_latency, spec.tail_tol
        ).throughput
    return [row]


def run(kind: str, spec: SweepSpec, jobs: int = 1) -> list[dict]:
    """Evaluate every grid point; rows come back in grid order whatever ``jobs`` is."""
    if kind not in ("model", "sim", "sweep", "compare"):
        raise ValueError(f"unknown run kind {kind!r}")
    tasks = [(kind, spec, i, p, s) for i, (p, s) in enumerate(spec.points())]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_work, tasks))
    else:
        chunks = [_work(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def summarize(rows: list[dict]) -> dict:
    """Min, max and mean error per variant of compare rows."""
    by: dict[str, list[float]] = {}
    for r in rows:
        by.setdefault(r["variant"], []).append(r["error"])
    return {
        v: {"min": min(e), "max": max(e), "mean": sum(e) / len(e), "points": len(e)}
        for v, e in by.items()
    }


def within_band(summary: dict, band: tuple, variant: str = Variant.PROBABILISTIC.value) -> bool:
    if variant not in summary:
        return True
    lo, hi = band
    return lo <= summary[variant]["min"] and summary[variant]["max"] <= hi


# -- serialization ----------------------------------------------------------

def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = list(rows[0])
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_json_safe(x) for x in v]
    return v


def to_json(rows: list[dict], metadata: dict | None = None, summary: dict | None = None) -> str:
    doc: dict[str, Any] = {"rows": _json_safe(rows)}
    if summary is not None:
        doc["summary"] = summary
    if metadata is not None:
        doc["metadata"] = metadata
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"
