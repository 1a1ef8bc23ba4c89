from .dde import DdeSystem, reduce_to_dde, simulate_dde
from .diagnostics import compare, metrics, peak_times, quarter_amplitudes
from .pde import build_grid, initial_state, simulate_pde, step_pde
from .types import AgeGrid, DdeState, OscillationMetrics, PdeState, Trajectory

__all__ = [
    "AgeGrid",
    "DdeState",
    "DdeSystem",
    "OscillationMetrics",
    "PdeState",
    "Trajectory",
    "build_grid",
    "compare",
    "initial_state",
    "metrics",
    "peak_times",
    "quarter_amplitudes",
    "reduce_to_dde",
    "simulate_dde",
    "simulate_pde",
    "step_pde",
]
