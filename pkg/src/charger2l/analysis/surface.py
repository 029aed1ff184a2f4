"""Two-parameter sweeps of steady-state quantities over resistance grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..model import ChargerParams, OperatingPoint, steady_state
from .efficiency import efficiency
from .sizing import min_capacitance, min_inductance

QUANTITIES = ("v_c", "l_min", "c_min", "eta")

# (x axis, y axis) swept for each quantity
AXES = {
    "v_c": ("r_ds_on", "r_l"),
    "l_min": ("r_ds_on", "r_l"),
    "c_min": ("r_c", "r_l"),
    "eta": ("r_ds_on", "r_l"),
}
UNITS = {"v_c": "V", "l_min": "H", "c_min": "F", "eta": "1"}


@dataclass(frozen=True)
class SurfaceFixed:
    """Values held constant during a sweep.

    ``v_c`` is the capacitor voltage used by the sizing bounds; ``None``
    substitutes the equilibrium voltage at each grid point instead.
    """

    v_d: float = 800.0
    r_ds_on: float = 35e-3
    r_l: float = 1.0
    r_c: float = 1.5
    r_b: float = 1.0
    v_ob: float = 450.0
    duty: float = 0.9
    delta_v_c: float = 0.02
    delta_i_l: float = 0.14
    i_l: float = 30.0
    v_c: float | None = 400.0
    inductance: float = 9.5e-3
    capacitance: float = 100e-9
    f_s: float = 27e3

    def params(self, **overrides: float) -> ChargerParams:
        values = dict(
            r_ds_on=self.r_ds_on,
            r_l=self.r_l,
            r_c=self.r_c,
            r_b=self.r_b,
            inductance=self.inductance,
            capacitance=self.capacitance,
            f_s=self.f_s,
        )
        values.update(overrides)
        return ChargerParams(**values)


@dataclass(frozen=True)
class SurfaceGrid:
    quantity: str
    x_name: str
    y_name: str
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # values[i, j] at (x[i], y[j])
    flags: np.ndarray = field(default=None)  # True where the point is infeasible/degenerate
    x_unit: str = "Ohm"
    y_unit: str = "Ohm"
    unit: str = ""

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.x), len(self.y)):
            raise ValidationError("surface values do not match axis lengths")
        for axis in (self.x, self.y):
            if np.any(np.diff(axis) <= 0):
                raise ValidationError("surface axes must be strictly increasing")
        if self.flags is None:
            object.__setattr__(self, "flags", np.zeros(self.values.shape, dtype=bool))

    def argmax(self) -> tuple[int, int]:
        i, j = np.unravel_index(np.nanargmax(self.values), self.values.shape)
        return int(i), int(j)


def default_axis(lo: float = 1e-6, hi: float = 1e3, points_per_decade: int = 10) -> np.ndarray:
    if not 0 < lo < hi:
        raise ValidationError(f"need 0 < lo < hi, got {lo!r}, {hi!r}")
    n = int(round(np.log10(hi / lo) * points_per_decade)) + 1
    return np.logspace(np.log10(lo), np.log10(hi), n)


def _point(quantity: str, params: ChargerParams, fixed: SurfaceFixed, printed: bool) -> tuple[float, bool]:
    if quantity == "v_c":
        return steady_state(params, fixed.duty, fixed.v_d, fixed.v_ob).v_c, False
    if quantity == "eta":
        op = steady_state(params, fixed.duty, fixed.v_d, fixed.v_ob)
        report = efficiency(params, op)
        if printed:
            return report.eta_printed, not report.printed_is_physical
        return report.eta_physical, op.i_l <= 0
    v_c = fixed.v_c
    if v_c is None:
        v_c = steady_state(params, fixed.duty, fixed.v_d, fixed.v_ob).v_c
    if quantity == "l_min":
        op = OperatingPoint(fixed.duty, fixed.v_d, fixed.v_ob, fixed.i_l, v_c, fixed.i_l)
        result = min_inductance(params, op, fixed.delta_i_l)
        return result.value, not result.feasible
    result = min_capacitance(params, v_c, fixed.v_ob, fixed.i_l, fixed.duty, fixed.delta_v_c)
    return result.value, result.degenerate


def surface(
    quantity: str,
    x: np.ndarray | None = None,
    y: np.ndarray | None = None,
    fixed: SurfaceFixed | None = None,
    printed: bool = False,
) -> SurfaceGrid:
    """Evaluate ``quantity`` on the (x, y) resistance grid.

    ``printed=True`` swaps the ``eta`` surface to the closed-form printed
    efficiency expression. Infeasible points are flagged, not raised.
    """
    if quantity not in QUANTITIES:
        raise ValidationError(f"unknown surface quantity {quantity!r}; expected one of {QUANTITIES}")
    fixed = fixed or SurfaceFixed()
    x = default_axis() if x is None else np.asarray(x, dtype=float)
    y = default_axis() if y is None else np.asarray(y, dtype=float)
    x_name, y_name = AXES[quantity]
    values = np.empty((len(x), len(y)))
    flags = np.zeros((len(x), len(y)), dtype=bool)
    for i, xv in enumerate(x):
        for j, yv in enumerate(y):
            params = fixed.params(**{x_name: float(xv), y_name: float(yv)})
            values[i, j], flags[i, j] = _point(quantity, params, fixed, printed)
    return SurfaceGrid(
        quantity=quantity,
        x_name=x_name,
        y_name=y_name,
        x=x,
        y=y,
        values=values,
        flags=flags,
        unit=UNITS[quantity],
    )


