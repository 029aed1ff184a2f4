"""Minimum inductance and capacitance for a peak-to-peak ripple budget.

Both bounds come from the on-interval slope of the state: the state moves
``2*delta`` over ``D*T_s``, so ``L >= v_L_on*D*T_s/(2*delta_i)`` and likewise
for the capacitor current.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError
from ..model import ChargerParams, OperatingPoint, coefficients


@dataclass(frozen=True)
class SizingResult:
    quantity: str  # "l_min" [H] or "c_min" [F]
    value: float
    bracket: float  # on-interval inductor voltage [V] or capacitor current [A]
    feasible: bool = True
    degenerate: bool = False
    inputs: dict[str, float] = field(default_factory=dict)


def min_inductance(params: ChargerParams, op: OperatingPoint, delta_i_l: float) -> SizingResult:
    if not delta_i_l > 0:
        raise ValidationError(f"delta_i_l must be > 0, got {delta_i_l!r}")
    r_in, r_b = params.r_in, params.r_b
    bracket = op.v_d - (r_b + r_in) / r_b * op.v_c + r_in / r_b * op.v_ob
    value = 0.5 * op.duty * params.t_s / delta_i_l * bracket
    return SizingResult(
        quantity="l_min",
        value=value,
        bracket=bracket,
        feasible=bracket >= 0,
        inputs={"duty": op.duty, "v_d": op.v_d, "v_c": op.v_c, "v_ob": op.v_ob, "i_l": op.i_l, "delta_i_l": delta_i_l},
    )


def min_capacitance(
    params: ChargerParams,
    v_c: float,
    v_ob: float,
    i_l: float,
    duty: float,
    delta_v_c: float,
) -> SizingResult:
    """Capacitance bound at explicit (not necessarily equilibrium) values.

    At an exact equilibrium the capacitor current bracket vanishes; such
    points, and any with a negative bracket, return zero flagged degenerate.
    """
    if not delta_v_c > 0:
        raise ValidationError(f"delta_v_c must be > 0, got {delta_v_c!r}")
    r_b = params.r_b
    bracket = i_l - v_c / r_b + v_ob / r_b
    scale = max(abs(i_l), abs(v_c / r_b), abs(v_ob / r_b))
    degenerate = bracket <= 1e-9 * scale
    value = 0.0 if degenerate else 0.5 * duty * params.t_s * coefficients(params).g_c / delta_v_c * bracket
    return SizingResult(
        quantity="c_min",
        value=value,
        bracket=bracket,
        degenerate=degenerate,
        inputs={"duty": duty, "v_c": v_c, "v_ob": v_ob, "i_l": i_l, "delta_v_c": delta_v_c},
    )
