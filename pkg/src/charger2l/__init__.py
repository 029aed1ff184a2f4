"""Modeling, analysis, control and simulation of a two-level DC-DC battery charger."""

from .control import ModulatorConfig, PiGains, PiState, design_pi, loop_gain, pi_step
from .errors import (
    ChargerError,
    ConfigError,
    DegeneratePolynomialError,
    DivergenceError,
    InfeasibleOperatingPointError,
    NoCrossingError,
    NumericError,
    ValidationError,
)
from .model import (
    ChargerParams,
    ConverterState,
    ExternalInputs,
    OperatingPoint,
    StateSpaceModel,
    SwitchState,
    duty_for_current,
    linearize,
    reference_params,
    rhs_averaged,
    rhs_switched,
    steady_state,
)
from .sim import Scenario, Trace, reference_scenario, run

__version__ = "0.1.0"

__all__ = [
    "ChargerError",
    "ChargerParams",
    "ConfigError",
    "ConverterState",
    "DegeneratePolynomialError",
    "DivergenceError",
    "ExternalInputs",
    "InfeasibleOperatingPointError",
    "ModulatorConfig",
    "NoCrossingError",
    "NumericError",
    "OperatingPoint",
    "PiGains",
    "PiState",
    "Scenario",
    "StateSpaceModel",
    "SwitchState",
    "Trace",
    "ValidationError",
    "design_pi",
    "duty_for_current",
    "linearize",
    "loop_gain",
    "reference_params",
    "reference_scenario",
    "pi_step",
    "rhs_averaged",
    "rhs_switched",
    "run",
    "steady_state",
]
