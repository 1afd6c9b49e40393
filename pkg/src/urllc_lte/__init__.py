"""LTE URLLC toolkit: analytic latency model and PDCCH blind-decoding simulator."""
from ._accel import USE_NUMBA, backend_name
from .blind import CombineRule, Mode, fp_probability_analytic
from .harness import SimConfig, SweepStats, run_sweep, wilson_interval
from .latency import generate_table2, latency_ms, latency_ttis

__all__ = [
    "USE_NUMBA", "backend_name", "CombineRule", "Mode", "fp_probability_analytic",
    "SimConfig", "SweepStats", "run_sweep", "wilson_interval", "generate_table2",
    "latency_ms", "latency_ttis",
]
__version__ = "0.1.0"
