"""Rational transfer functions in gain/zero/pole form and the frequency- and
time-domain analyses built on them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import DegeneratePolynomialError, NoCrossingError, ValidationError
from ..integrate import rk4_linear_map
from ..model import ChargerParams, StateSpaceModel, eig2


def _as_roots(values: Iterable[complex]) -> tuple[complex, ...]:
    return tuple(complex(v) for v in values)


@dataclass(frozen=True)
class RationalTransferFunction:
    """``G(s) = k * prod(1 - s/z) / prod(1 - s/p)``.

    Roots at the origin contribute a bare ``s`` (zero) or ``1/s`` (pole)
    factor instead, so ``k`` is the DC gain whenever there are none and the
    Bode (time-constant) gain otherwise.
    """

    k: float
    zeros: tuple[complex, ...] = ()
    poles: tuple[complex, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "zeros", _as_roots(self.zeros))
        object.__setattr__(self, "poles", _as_roots(self.poles))
        object.__setattr__(self, "k", float(self.k))

    @classmethod
    def from_polynomials(cls, num: Sequence[float], den: Sequence[float]) -> "RationalTransferFunction":
        """Build from coefficient lists, highest power first."""
        num = np.trim_zeros(np.asarray(num, dtype=float), "f")
        den = np.trim_zeros(np.asarray(den, dtype=float), "f")
        if den.size == 0:
            raise ValidationError("denominator is identically zero")
        if num.size == 0:
            return cls(0.0, (), ())
        zeros = np.roots(num) if num.size > 1 else np.array([])
        poles = np.roots(den) if den.size > 1 else np.array([])
        return cls(_bode_gain(num[0] / den[0], zeros, poles), tuple(zeros), tuple(poles))

    @property
    def origin_order(self) -> int:
        """Number of poles at the origin minus number of zeros there."""
        return sum(1 for p in self.poles if p == 0) - sum(1 for z in self.zeros if z == 0)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.full(s.shape, self.k, dtype=complex)
        for z in self.zeros:
            out = out * (s if z == 0 else 1.0 - s / z)
        for p in self.poles:
            out = out / (s if p == 0 else 1.0 - s / p)
        return out if out.ndim else complex(out)

    def __mul__(self, other: "RationalTransferFunction") -> "RationalTransferFunction":
        if not isinstance(other, RationalTransferFunction):
            return NotImplemented
        return RationalTransferFunction(self.k * other.k, self.zeros + other.zeros, self.poles + other.poles)

    def scaled(self, factor: float) -> "RationalTransferFunction":
        return RationalTransferFunction(self.k * factor, self.zeros, self.poles)

    def numerator(self) -> np.ndarray:
        return self.k * _factor_poly(self.zeros)

    def denominator(self) -> np.ndarray:
        return _factor_poly(self.poles)

    def log_magnitude_phase(self, omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Magnitude in dB and continuous phase in degrees along ``s = j*omega``.

        The phase is the sum of the per-factor angles, each of which is
        continuous in ``omega``, so no unwrapping is needed.
        """
        jw = 1j * np.asarray(omega, dtype=float)
        mag = np.full(jw.shape, math.log10(abs(self.k)) if self.k != 0 else -np.inf)
        phase = np.full(jw.shape, 0.0 if self.k >= 0 else math.pi)
        for z in self.zeros:
            f = jw if z == 0 else 1.0 - jw / z
            mag = mag + np.log10(np.abs(f))
            phase = phase + np.angle(f)
        for p in self.poles:
            f = jw if p == 0 else 1.0 - jw / p
            mag = mag - np.log10(np.abs(f))
            phase = phase - np.angle(f)
        return 20.0 * mag, np.degrees(phase)


def _bode_gain(lead: float, zeros, poles) -> float:
    """Convert a leading coefficient ratio to the time-constant-form gain."""
    k = complex(lead)
    for z in zeros:
        if z != 0:
            k *= -z
    for p in poles:
        if p != 0:
            k /= -p
    return float(k.real)


def _factor_poly(roots: Sequence[complex]) -> np.ndarray:
    """Coefficients of ``prod(1 - s/r)`` (``s`` for roots at the origin)."""
    poly = np.array([1.0 + 0j])
    for r in roots:
        factor = np.array([1.0, 0.0]) if r == 0 else np.array([-1.0 / r, 1.0])
        poly = np.polymul(poly, factor)
    if np.allclose(poly.imag, 0.0, atol=1e-12 * np.max(np.abs(poly))):
        return poly.real
    return poly


def control_to_battery_tf(model: StateSpaceModel, output: int = 2, input: int = 2) -> RationalTransferFunction:
    """Single entry of ``C (sI - A)^-1 B + D`` for the two-state model.

    Defaults to battery current per unit duty. The numerator comes from the
    2x2 adjugate, the poles from the eigenvalues of ``A``.
    """
    a = model.a
    b1, b2 = model.b[0, input], model.b[1, input]
    c1, c2 = model.c[output, 0], model.c[output, 1]
    dd = model.d[output, input]
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    num = np.array([
        dd,
        c1 * b1 + c2 * b2 - dd * tr,
        c1 * (a[0, 1] * b2 - a[1, 1] * b1) + c2 * (a[1, 0] * b1 - a[0, 0] * b2) + dd * det,
    ])
    num = np.trim_zeros(num, "f")
    poles = eig2(a)
    if num.size == 0:
        return RationalTransferFunction(0.0, (), tuple(poles))
    zeros = np.roots(num) if num.size > 1 else np.array([])
    return RationalTransferFunction(_bode_gain(num[0], zeros, poles), tuple(zeros), tuple(poles))


def dc_gain_closed_form(params: ChargerParams, v_d: float, tf: RationalTransferFunction) -> float:
    """``V_d / (L*C*(r_b + r_c)*w_p1*w_p2)`` using the pole magnitudes of ``tf``."""
    if len(tf.poles) != 2:
        raise ValidationError("closed-form DC gain needs exactly two poles")
    w_product = abs(tf.poles[0] * tf.poles[1])
    return v_d / (params.inductance * params.capacitance * (params.r_b + params.r_c) * w_product)


@dataclass(frozen=True)
class FrequencyResponse:
    f_hz: np.ndarray
    mag_db: np.ndarray
    phase_deg: np.ndarray

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.f_hz.tolist(), self.mag_db.tolist(), self.phase_deg.tolist()))


def log_grid(f_min: float, f_max: float, points_per_decade: int) -> np.ndarray:
    if not 0 < f_min < f_max:
        raise ValidationError(f"need 0 < f_min < f_max, got {f_min!r}, {f_max!r}")
    if points_per_decade < 1:
        raise ValidationError("points_per_decade must be >= 1")
    decades = math.log10(f_max / f_min)
    n = max(2, int(math.ceil(decades * points_per_decade - 1e-9)) + 1)
    return np.logspace(math.log10(f_min), math.log10(f_max), n)


def frequency_response(
    tf: RationalTransferFunction,
    f_min: float,
    f_max: float,
    points_per_decade: int = 50,
) -> FrequencyResponse:
    f = log_grid(f_min, f_max, points_per_decade)
    mag, phase = tf.log_magnitude_phase(2.0 * math.pi * f)
    return FrequencyResponse(f, mag, phase)


@dataclass(frozen=True)
class Crossover:
    f_hz: float
    degenerate: bool = False


def crossover_frequency(fr: FrequencyResponse, tol_db: float = 1e-9) -> Crossover:
    """Lowest 0 dB crossing, interpolated linearly in (log f, dB)."""
    mag = fr.mag_db
    f = fr.f_hz
    if np.all(np.abs(mag) <= tol_db):
        return Crossover(float(f[0]), degenerate=True)
    for i in range(len(f) - 1):
        m0, m1 = mag[i], mag[i + 1]
        if m0 == 0.0:
            return Crossover(float(f[i]))
        if (m0 > 0) != (m1 > 0) or m1 == 0.0:
            frac = m0 / (m0 - m1)
            log_f = math.log10(f[i]) + frac * (math.log10(f[i + 1]) - math.log10(f[i]))
            return Crossover(float(10.0 ** log_f))
    raise NoCrossingError(
        f"magnitude stays {'above' if mag[0] > 0 else 'below'} 0 dB over "
        f"[{f[0]:.6g}, {f[-1]:.6g}] Hz"
    )


def root_locus(
    open_loop: RationalTransferFunction,
    gains: Iterable[float],
) -> list[tuple[float, np.ndarray]]:
    """Closed-loop poles, the roots of ``den(s) + K*num(s)``, for each gain."""
    num = np.real_if_close(open_loop.numerator())
    den = np.real_if_close(open_loop.denominator())
    if len(num) > len(den):
        raise ValidationError("root locus needs a proper open-loop transfer function")
    num = np.concatenate([np.zeros(len(den) - len(num)), num])
    out = []
    for gain in gains:
        if not gain > 0:
            raise ValidationError(f"root-locus gains must be positive, got {gain!r}")
        poly = den + gain * num
        lead_scale = max(abs(den[0]), abs(gain * num[0]))
        if lead_scale == 0 or abs(poly[0]) <= 1e-12 * lead_scale:
            raise DegeneratePolynomialError(f"leading coefficients cancel at K = {gain:g}")
        roots = np.roots(poly / poly[0]) if len(poly) > 1 else np.array([], dtype=complex)
        roots = np.array(sorted(roots.astype(complex), key=lambda r: (r.real, r.imag)))
        out.append((float(gain), roots))
    return out


def closed_loop(loop: RationalTransferFunction) -> tuple[np.ndarray, np.ndarray]:
    """Numerator and denominator of ``T/(1+T)`` (highest power first)."""
    num = np.real_if_close(loop.numerator()).astype(float)
    den = np.real_if_close(loop.denominator()).astype(float)
    pad = len(den) - len(num)
    if pad < 0:
        raise ValidationError("loop gain must be proper")
    num = np.concatenate([np.zeros(pad), num])
    return num, den + num


def _companion(num: np.ndarray, den: np.ndarray):
    """Controllable canonical realization of a proper ``num/den``."""
    den = np.asarray(den, dtype=float)
    num = np.asarray(num, dtype=float)
    num = num / den[0]
    den = den / den[0]
    n = len(den) - 1
    d = num[0]
    resid = num[1:] - d * den[1:]
    a = np.zeros((n, n))
    if n > 1:
        a[:-1, 1:] = np.eye(n - 1)
    a[-1, :] = -den[1:][::-1]
    b = np.zeros((n, 1))
    b[-1, 0] = 1.0
    c = resid[::-1].reshape(1, n)
    return a, b, c, d


def step_response(
    loop: RationalTransferFunction,
    horizon: float,
    dt: float,
) -> list[tuple[float, float]]:
    """Unit-step response of the unity-feedback loop ``T/(1+T)``.

    The closed loop is realized in controllable canonical form after scaling
    frequency by the geometric mean of its pole magnitudes. Each output
    interval ``dt`` is covered by RK4 substeps short enough for the fastest
    mode, composed into a single affine map.
    """
    if not horizon > dt > 0:
        raise ValidationError(f"need horizon > dt > 0, got horizon={horizon!r}, dt={dt!r}")
    num, den = closed_loop(loop)
    den_trim = np.trim_zeros(den, "f")
    num = num[len(num) - len(den_trim):]
    cl_poles = np.roots(den_trim) if len(den_trim) > 1 else np.array([])
    if np.any(cl_poles.real > 0):
        warnings.warn(
            "closed loop is unstable; step response will diverge",
            RuntimeWarning,
            stacklevel=2,
        )
    n = len(den_trim) - 1
    if n == 0:
        value = float(num[-1] / den_trim[-1])
        steps = int(math.floor(horizon / dt + 1e-9))
        return [(i * dt, value) for i in range(steps + 1)]

    mags = np.abs(cl_poles[cl_poles != 0])
    w0 = float(np.exp(np.mean(np.log(mags)))) if mags.size else 1.0
    # s = w0*sigma: coefficient of sigma^(n-i) picks up w0^(n-i).
    powers = w0 ** np.arange(n, -1, -1, dtype=float)
    a, b, c, d = _companion(num * powers, den_trim * powers)
    a = w0 * a
    b = w0 * b

    rho = float(np.max(np.abs(np.linalg.eigvals(a))))
    substeps = max(1, int(math.ceil(dt * rho)))
    h = dt / substeps
    m_h, n_h = rk4_linear_map(a, b, h)
    m_dt = np.eye(n)
    n_dt = np.zeros((n, 1))
    for _ in range(substeps):
        m_dt = m_h @ m_dt
        n_dt = m_h @ n_dt + n_h

    steps = int(math.floor(horizon / dt + 1e-9))
    x = np.zeros((n, 1))
    out = []
    for i in range(steps + 1):
        out.append((i * dt, float((c @ x)[0, 0] + d)))
        x = m_dt @ x + n_dt
    return out


def settling_time(t: Sequence[float], y: Sequence[float], band_fraction: float = 0.02, final: float | None = None):
    """Time after which ``y`` stays within ``final*(1 +- band)``; None if never."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    final = float(y[-1]) if final is None else final
    outside = np.abs(y - final) > band_fraction * abs(final)
    if not outside.any():
        return float(t[0])
    last = int(np.nonzero(outside)[0][-1])
    if last == len(y) - 1:
        return None
    return float(t[last + 1])
