"""PI current controller, sawtooth PWM modulator, and loop-gain assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analysis.transfer import RationalTransferFunction
from .errors import ValidationError

OMEGA_CONVENTIONS = ("2pi_fs", "fs")


@dataclass(frozen=True)
class PiGains:
    """``G_c(s) = k_p * (1 + 1/(tau_i*s))``. ``tau_i = inf`` gives a pure P controller."""

    k_p: float
    tau_i: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k_p) and self.k_p > 0):
            raise ValidationError(f"k_p must be finite and > 0, got {self.k_p!r}")
        if not self.tau_i > 0:
            raise ValidationError(f"tau_i must be > 0, got {self.tau_i!r}")

    @property
    def k_i(self) -> float:
        return self.k_p / self.tau_i

    def transfer_function(self) -> RationalTransferFunction:
        if math.isinf(self.tau_i):
            return RationalTransferFunction(self.k_p, [], [])
        # k_p*(tau_i*s + 1)/(tau_i*s): zero at -1/tau_i, pole at the origin.
        return RationalTransferFunction(self.k_i, [-1.0 / self.tau_i], [0.0])


@dataclass(frozen=True)
class ModulatorConfig:
    v_m: float
    t_s: float
    d_min: float = 0.0
    d_max: float = 1.0

    def __post_init__(self) -> None:
        if not self.v_m > 0:
            raise ValidationError(f"v_m must be > 0, got {self.v_m!r}")
        if not self.t_s > 0:
            raise ValidationError(f"t_s must be > 0, got {self.t_s!r}")
        if not 0.0 <= self.d_min < self.d_max <= 1.0:
            raise ValidationError(
                f"need 0 <= d_min < d_max <= 1, got d_min={self.d_min!r}, d_max={self.d_max!r}"
            )


@dataclass(frozen=True)
class PiState:
    integrator: float = 0.0
    d: float = 0.0
    saturated: bool = False


def omega_s(f_s: float, convention: str = "2pi_fs") -> float:
    if convention == "2pi_fs":
        return 2.0 * math.pi * f_s
    if convention == "fs":
        return float(f_s)
    raise ValidationError(f"unknown omega convention {convention!r}; expected one of {OMEGA_CONVENTIONS}")


def design_pi(
    plant: RationalTransferFunction,
    f_s: float,
    convention: str = "2pi_fs",
    v_m: float = 1.0,
) -> PiGains:
    """Place the high-frequency loop crossover at the switching frequency.

    Above every plant corner the compensated loop behaves like
    ``-j*k*k_p/(v_m*omega)``; setting its magnitude to one at ``omega_s`` gives
    ``k_p = omega_s*v_m/k``. The integral time is ``100/omega_s``.
    """
    k = plant.k
    if not (math.isfinite(k) and k > 0):
        raise ValidationError(f"plant DC gain must be positive, got {k!r}")
    w_s = omega_s(f_s, convention)
    return PiGains(k_p=w_s * v_m / k, tau_i=100.0 / w_s)


def pi_step(
    state: PiState,
    gains: PiGains,
    error: float,
    h: float,
    config: ModulatorConfig,
) -> tuple[PiState, float]:
    """Advance the PI one forward-Euler step and return the clamped duty.

    The integrator is frozen while the unclamped output already sits beyond a
    limit and the error pushes it further out (conditional integration).
    """
    if not h > 0:
        raise ValidationError(f"step must be > 0, got {h!r}")
    integrator = state.integrator
    k_p = gains.k_p
    k_i = gains.k_i
    d_pre = k_p * error + integrator
    frozen = (d_pre >= config.d_max and error > 0) or (d_pre <= config.d_min and error < 0)
    if not frozen:
        integrator += k_i * error * h
    d_raw = k_p * error + integrator
    d = min(max(d_raw, config.d_min), config.d_max)
    return PiState(integrator=integrator, d=d, saturated=d != d_raw), d


def carrier(t: float, config: ModulatorConfig) -> float:
    """Rising sawtooth of peak ``v_m`` that resets every ``t_s``."""
    x = t / config.t_s
    n = round(x)
    if abs(x - n) <= 1e-9 * max(1.0, abs(x)):
        return 0.0
    return config.v_m * (x - math.floor(x))


def pwm_compare(d: float, v_carry: float, config: ModulatorConfig) -> int:
    """Switching function: 1 while the scaled duty command exceeds the carrier."""
    return 1 if d * config.v_m > v_carry else 0


def loop_gain(
    gains: PiGains | None,
    plant: RationalTransferFunction,
    v_m: float = 1.0,
) -> RationalTransferFunction:
    """``G_c(s) * (1/v_m) * plant(s)``; ``gains=None`` drops the compensator."""
    loop = plant.scaled(1.0 / v_m)
    if gains is None:
        return loop
    return gains.transfer_function() * loop

