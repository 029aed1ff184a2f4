"""Conversion efficiency at a DC operating point."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ValidationError
from ..model import ChargerParams, OperatingPoint


@dataclass(frozen=True)
class EfficiencyReport:
    """Efficiency figures at one operating point.

    ``eta_physical`` is the terminal power over the switched input power. The
    closed-form ``eta_printed`` expression is kept for comparison only: on
    realistic parameters it exceeds one, so ``printed_is_physical`` flags
    whether it falls inside (0, 1].
    """

    eta_physical: float
    eta_printed: float
    p_in: float
    p_out_terminal: float
    p_out_emf: float
    a_v1: float
    a_v2: float

    @property
    def printed_is_physical(self) -> bool:
        return 0.0 < self.eta_printed <= 1.0


def printed_efficiency(params: ChargerParams, duty: float, a_v1: float, a_v2: float) -> float:
    """``r_b*(A_v1/(r_b||R_in) - D/R_in) / ((A_v2 - 1)*D)``; NaN where undefined."""
    r_in = params.r_in
    r_b = params.r_b
    if r_in == 0 or r_b == 0 or a_v2 == 1.0:
        return math.nan
    r_par = r_b * r_in / (r_b + r_in)
    return r_b * (a_v1 / r_par - duty / r_in) / ((a_v2 - 1.0) * duty)


def efficiency(params: ChargerParams, op: OperatingPoint) -> EfficiencyReport:
    if op.duty <= 0:
        raise ValidationError("efficiency is undefined at zero duty")
    if op.v_d == 0 or op.v_ob == 0:
        raise ValidationError("efficiency needs nonzero v_d and v_ob")
    p_in = op.duty * op.v_d * op.i_l
    p_out_terminal = op.v_c * op.i_l
    p_out_emf = op.v_ob * op.i_b
    a_v1 = op.v_c / op.v_d
    a_v2 = op.v_c / op.v_ob
    return EfficiencyReport(
        eta_physical=a_v1 / op.duty,
        eta_printed=printed_efficiency(params, op.duty, a_v1, a_v2),
        p_in=p_in,
        p_out_terminal=p_out_terminal,
        p_out_emf=p_out_emf,
        a_v1=a_v1,
        a_v2=a_v2,
    )
