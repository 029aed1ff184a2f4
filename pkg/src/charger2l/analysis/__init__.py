"""Steady-state figures of merit, transfer functions, and sweeps."""

from .efficiency import EfficiencyReport, efficiency, printed_efficiency
from .sizing import SizingResult, min_capacitance, min_inductance
from .surface import QUANTITIES, SurfaceFixed, SurfaceGrid, default_axis, surface
from .transfer import (
    Crossover,
    FrequencyResponse,
    RationalTransferFunction,
    closed_loop,
    control_to_battery_tf,
    crossover_frequency,
    dc_gain_closed_form,
    frequency_response,
    root_locus,
    settling_time,
    step_response,
)

__all__ = [
    "Crossover",
    "EfficiencyReport",
    "FrequencyResponse",
    "QUANTITIES",
    "RationalTransferFunction",
    "SizingResult",
    "SurfaceFixed",
    "SurfaceGrid",
    "closed_loop",
    "control_to_battery_tf",
    "crossover_frequency",
    "dc_gain_closed_form",
    "default_axis",
    "efficiency",
    "frequency_response",
    "min_capacitance",
    "min_inductance",
    "printed_efficiency",
    "root_locus",
    "settling_time",
    "step_response",
    "surface",
]
