"""Exact time-dependent transmission of a cutoff plane wave through a
rectangular barrier, with its resonance expansion and delay-time analysis."""

__version__ = "0.1.0"

from .params import BarrierSpec, DerivedScales, ParameterError, derive_scales
from .barrier import ALPHA_C, delay_time, hartman_time, transmission
from .resonances import find_poles, resonant_mode
from .dynamics import ModeSet, evaluate, time_series

__all__ = [
    "ALPHA_C", "BarrierSpec", "DerivedScales", "ModeSet", "ParameterError", "delay_time",
    "derive_scales", "evaluate", "find_poles", "hartman_time", "resonant_mode",
    "time_series", "transmission",
]
