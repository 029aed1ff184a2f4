"""Plant model of the two-level (buck-type) battery charger.

The converter has two states, the inductor current ``i_l`` and the capacitor
voltage ``v_c``. The capacitor (ESR ``r_c``) sits in parallel with a Thevenin
battery (EMF ``v_ob``, internal resistance ``r_b``); the inductor path carries
``R_in = r_ds_on + r_l``.

All ``r_b||r_c`` ratios are evaluated in the equivalent forms

    (r_b||r_c)/r_c        = r_b / (r_b + r_c)
    (r_b||r_c)/r_b        = r_c / (r_b + r_c)
    (r_b||r_c)/(r_b*r_c)  = 1 / (r_b + r_c)

which stay finite when one of the two resistances is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleOperatingPointError, ValidationError


def parallel(r1: float, r2: float) -> float:
    """Parallel combination ``r1*r2/(r1+r2)`` of two resistances."""
    if r1 < 0 or r2 < 0:
        raise ValidationError(f"resistances must be nonnegative, got {r1!r}, {r2!r}")
    if r1 == 0 and r2 == 0:
        raise ValidationError("parallel(0, 0) is undefined")
    return r1 * r2 / (r1 + r2)


@dataclass(frozen=True)
class ChargerParams:
    """Plant constants. SI units throughout."""

    r_ds_on: float
    r_l: float
    r_c: float
    r_b: float
    inductance: float
    capacitance: float
    f_s: float
    v_m: float = 1.0

    def __post_init__(self) -> None:
        for name in ("r_ds_on", "r_l", "r_c", "r_b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
        if self.r_b + self.r_c <= 0:
            raise ValidationError("r_b and r_c cannot both be zero")
        for name in ("inductance", "capacitance", "f_s", "v_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def r_in(self) -> float:
        return self.r_ds_on + self.r_l

    @property
    def t_s(self) -> float:
        return 1.0 / self.f_s

    @property
    def r_p(self) -> float:
        """``r_b || r_c``."""
        return parallel(self.r_b, self.r_c)

    def replace(self, **changes: float) -> "ChargerParams":
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update(changes)
        return ChargerParams(**values)


def reference_params() -> ChargerParams:
    """Reference charger: 35 mOhm switches, 1 Ohm inductor ESR, 9.5 mH, 100 nF, 27 kHz."""
    return ChargerParams(
        r_ds_on=35e-3,
        r_l=1.0,
        r_c=1.5,
        r_b=1.0,
        inductance=9.5e-3,
        capacitance=100e-9,
        f_s=27e3,
        v_m=1.0,
    )


class _Coefficients(NamedTuple):
    g_c: float  # (r_b||r_c)/r_c, weight of v_c in v_L and of i_l in i_C
    g_b: float  # (r_b||r_c)/r_b, weight of v_ob in v_L
    g_cb: float  # (r_b||r_c)/(r_b*r_c), conductance of the v_c - v_ob branch
    r_series: float  # R_in + r_b||r_c


def coefficients(params: ChargerParams) -> _Coefficients:
    denom = params.r_b + params.r_c
    return _Coefficients(
        g_c=params.r_b / denom,
        g_b=params.r_c / denom,
        g_cb=1.0 / denom,
        r_series=params.r_in + params.r_b * params.r_c / denom,
    )


@dataclass(frozen=True)
class ConverterState:
    i_l: float
    v_c: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.i_l) and math.isfinite(self.v_c)):
            raise ValidationError(f"state must be finite, got ({self.i_l!r}, {self.v_c!r})")


@dataclass(frozen=True)
class ExternalInputs:
    v_d: float
    v_ob: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v_d) and math.isfinite(self.v_ob)):
            raise ValidationError("inputs must be finite")
        if self.v_d < 0:
            raise ValidationError(f"v_d must be >= 0, got {self.v_d!r}")


class SwitchState(int):
    """High-side switch state: 1 closed (Q1 on, Q2 off), 0 open."""

    def __new__(cls, value: int) -> "SwitchState":
        if value not in (0, 1):
            raise ValidationError(f"switch state must be 0 or 1, got {value!r}")
        return super().__new__(cls, int(value))

    @property
    def complement(self) -> "SwitchState":
        """State of the low-side switch Q2."""
        return SwitchState(1 - int(self))


class Derivative(NamedTuple):
    di_l: float
    dv_c: float


class NodeOutputs(NamedTuple):
    i_b: float
    v_l: float
    i_c: float


def _evaluate(params: ChargerParams, i_l: float, v_c: float, v_d_eff: float, v_ob: float):
    k = coefficients(params)
    v_l = v_d_eff - k.g_c * v_c - k.g_b * v_ob - k.r_series * i_l
    i_c = k.g_c * i_l - k.g_cb * (v_c - v_ob)
    i_b = i_l - i_c  # KCL at the output node
    return v_l, i_c, i_b


def rhs_switched(
    params: ChargerParams,
    state: ConverterState,
    inputs: ExternalInputs,
    s: int,
) -> tuple[Derivative, NodeOutputs]:
    """Instantaneous dynamics with the high-side switch in position ``s``."""
    s = SwitchState(s)
    v_l, i_c, i_b = _evaluate(params, state.i_l, state.v_c, s * inputs.v_d, inputs.v_ob)
    return (
        Derivative(v_l / params.inductance, i_c / params.capacitance),
        NodeOutputs(i_b=i_b, v_l=v_l, i_c=i_c),
    )


def rhs_averaged(
    params: ChargerParams,
    state: ConverterState,
    inputs: ExternalInputs,
    d: float,
) -> Derivative:
    """Period-averaged dynamics: the switch is replaced by the duty ``d``."""
    if not 0.0 <= d <= 1.0:
        raise ValidationError(f"duty must lie in [0, 1], got {d!r}")
    v_l, i_c, _ = _evaluate(params, state.i_l, state.v_c, d * inputs.v_d, inputs.v_ob)
    return Derivative(v_l / params.inductance, i_c / params.capacitance)


@dataclass(frozen=True)
class OperatingPoint:
    duty: float
    v_d: float
    v_ob: float
    i_l: float
    v_c: float
    i_b: float

    def as_dict(self) -> dict[str, float]:
        return {
            "duty": self.duty,
            "v_d": self.v_d,
            "v_ob": self.v_ob,
            "i_l": self.i_l,
            "v_c": self.v_c,
            "i_b": self.i_b,
        }


def equilibrium_residuals(params: ChargerParams, op: OperatingPoint) -> tuple[float, float]:
    """Relative residuals of the volt-second and charge balance equations.

    Each residual is divided by the largest magnitude among its terms.
    """
    k = coefficients(params)
    terms_v = (op.duty * op.v_d, k.g_c * op.v_c, k.g_b * op.v_ob, k.r_series * op.i_l)
    res_v = terms_v[0] - terms_v[1] - terms_v[2] - terms_v[3]
    terms_q = (params.r_b * op.i_l, op.v_c, op.v_ob)
    res_q = terms_q[0] - terms_q[1] + terms_q[2]
    scale_v = max(map(abs, terms_v)) or 1.0
    scale_q = max(map(abs, terms_q)) or 1.0
    return res_v / scale_v, res_q / scale_q


def steady_state(params: ChargerParams, duty: float, v_d: float, v_ob: float) -> OperatingPoint:
    """DC equilibrium of the averaged model at a fixed duty cycle.

    Uses ``V_C = (D*V_d*r_b + R_in*V_ob)/(r_b + R_in)``, which is finite at
    ``R_in = 0``, and ``I_L = I_B = (D*V_d - V_ob)/(r_b + R_in)``, which
    avoids the cancellation in ``V_C - V_ob`` when ``r_b`` is small.
    """
    if not 0.0 <= duty <= 1.0:
        raise ValidationError(f"duty must lie in [0, 1], got {duty!r}")
    if params.r_b <= 0:
        raise ValidationError("steady state requires r_b > 0")
    r_in = params.r_in
    v_c = (duty * v_d * params.r_b + r_in * v_ob) / (params.r_b + r_in)
    i_l = (duty * v_d - v_ob) / (params.r_b + r_in)
    return OperatingPoint(duty=duty, v_d=v_d, v_ob=v_ob, i_l=i_l, v_c=v_c, i_b=i_l)


def duty_for_current(params: ChargerParams, i_b_target: float, v_d: float, v_ob: float) -> OperatingPoint:
    """Operating point that delivers ``i_b_target`` into the battery."""
    if v_d <= 0:
        raise InfeasibleOperatingPointError(f"v_d must be > 0 to solve for duty, got {v_d!r}")
    k = coefficients(params)
    v_c = v_ob + params.r_b * i_b_target
    duty = (k.g_c * v_c + k.g_b * v_ob + k.r_series * i_b_target) / v_d
    if not 0.0 <= duty <= 1.0:
        raise InfeasibleOperatingPointError(
            f"{i_b_target:g} A at v_d={v_d:g} V, v_ob={v_ob:g} V needs duty {duty:.6g}"
        )
    return OperatingPoint(duty=duty, v_d=v_d, v_ob=v_ob, i_l=i_b_target, v_c=v_c, i_b=i_b_target)


INPUT_NAMES = ("v_d", "v_ob", "d")
OUTPUT_NAMES = ("i_l", "v_c", "i_b")
STATE_NAMES = ("i_l", "v_c")


@dataclass(frozen=True)
class StateSpaceModel:
    """Small-signal model ``x' = A x + B u``, ``y = C x + D u``.

    Inputs are ordered (v_d, v_ob, d), outputs (i_l, v_c, i_b).
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    operating_point: OperatingPoint | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        shapes = {"a": (2, 2), "b": (2, 3), "c": (3, 2), "d": (3, 3)}
        for name, shape in shapes.items():
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValidationError(f"{name} must be {shape}, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def eigenvalues(self) -> np.ndarray:
        return eig2(self.a)


def eig2(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real 2x2 matrix, largest magnitude first.

    Uses the cancellation-free quadratic formula so that widely separated
    eigenvalues keep full relative precision.
    """
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    half = tr / 2.0
    disc = half * half - det
    if disc >= 0:
        root = math.sqrt(disc)
        big = half + math.copysign(root, half) if half != 0 else root
        if big == 0:
            return np.array([0.0, 0.0], dtype=complex)
        return np.array([big, det / big], dtype=complex)
    root = math.sqrt(-disc)
    return np.array([complex(half, root), complex(half, -root)])


def linearize(params: ChargerParams, op: OperatingPoint) -> StateSpaceModel:
    """Small-signal state-space model around ``op``."""
    k = coefficients(params)
    inv_l = 1.0 / params.inductance
    inv_c = 1.0 / params.capacitance
    a = [
        [-k.r_series * inv_l, -k.g_c * inv_l],
        [k.g_c * inv_c, -k.g_cb * inv_c],
    ]
    b = [
        [op.duty * inv_l, -k.g_b * inv_l, op.v_d * inv_l],
        [0.0, k.g_cb * inv_c, 0.0],
    ]
    c = [
        [1.0, 0.0],
        [0.0, 1.0],
        [k.g_b, k.g_cb],
    ]
    d = [
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.0, -k.g_cb, 0.0],
    ]
    return StateSpaceModel(np.array(a), np.array(b), np.array(c), np.array(d), operating_point=op)
