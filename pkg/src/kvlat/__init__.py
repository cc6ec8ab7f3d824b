"""Throughput model and simulator for KV operations on microsecond-latency memory."""
__version__ = "0.1.0"

from .model import Variant, predict, reciprocal
from .params import CprParams, OperationModelParams, SystemParams
from .sim import SimConfig, SimResult, run_memory_only, run_simulation, sweep_thread_count
from .workload import WorkloadProfile, aggregate_to_model, preset

__all__ = [
    "CprParams", "OperationModelParams", "SimConfig", "SimResult", "SystemParams", "Variant",
    "WorkloadProfile", "aggregate_to_model", "predict", "preset", "reciprocal",
    "run_memory_only", "run_simulation", "sweep_thread_count",
]
