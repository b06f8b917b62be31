"""
Sum-weight gossip execution: state, activation clocks, runs and diagnostics.
"""

from .clock import activation_probabilities, activation_rates, pick_broadcasters, sample_activation
from .diagnostics import WindowDiagnostics, WindowTracker, psi_diagnostics, window_diagnostics
from .runner import BatchTrace, Trace, run, run_batch
from .state import Mode, SumWeightState, estimates, init_state, step

__all__ = [
    "Mode",
    "SumWeightState",
    "init_state",
    "step",
    "estimates",
    "activation_rates",
    "activation_probabilities",
    "pick_broadcasters",
    "sample_activation",
    "psi_diagnostics",
    "WindowDiagnostics",
    "WindowTracker",
    "window_diagnostics",
    "Trace",
    "BatchTrace",
    "run",
    "run_batch",
]
