"""Truncated Fock-space scattering with stochastic sector collapse."""

from fockbox._core import (
    EngineError,
    check_suite,
    decay_jump_times,
    double_slit_histogram,
    epr_correlation,
    is_unistochastic,
    pair_production_frequencies,
    run_scenario,
    version,
)

__version__ = version()

__all__ = [
    "EngineError",
    "check_suite",
    "decay_jump_times",
    "double_slit_histogram",
    "epr_correlation",
    "is_unistochastic",
    "pair_production_frequencies",
    "run_scenario",
    "version",
]
