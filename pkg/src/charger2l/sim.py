"""Fixed-step closed-loop simulation of the charger and trace metrics.

A run advances the plant with classical RK4 at a constant step ``h``. Every
step the PI controller sees the instantaneous battery current, produces a
duty command, and (in switched mode) the sawtooth comparison decides the
switch position held for that step. In averaged mode the duty itself drives
the averaged plant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .control import ModulatorConfig, PiGains, PiState
from .errors import DivergenceError, ValidationError
from .integrate import stable_step
from .model import ChargerParams, coefficients, eig2, linearize, steady_state

MODES = ("switched", "averaged")
DEFAULT_STEPS_PER_PERIOD = 200
STEADY_WINDOW = 10e-3  # length of the metric window closing each schedule segment [s]
_BLOWUP = 1e12


def _check_schedule(name: str, steps: Sequence[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    steps = tuple((float(t), float(v)) for t, v in steps)
    if not steps:
        raise ValidationError(f"{name} schedule is empty")
    if steps[0][0] != 0.0:
        raise ValidationError(f"{name} schedule must start at t = 0")
    times = [t for t, _ in steps]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValidationError(f"{name} schedule must be strictly increasing in time")
    return steps


@dataclass(frozen=True)
class Scenario:
    """Operating scenario; ``h=None`` picks ``T_s/200`` at run time."""

    duration: float
    i_l0: float
    v_c0: float
    v_d: float
    ref_steps: tuple[tuple[float, float], ...]
    vob_steps: tuple[tuple[float, float], ...]
    mode: str = "switched"
    h: float | None = None

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ValidationError(f"duration must be > 0, got {self.duration!r}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.h is not None and not self.h > 0:
            raise ValidationError(f"h must be > 0, got {self.h!r}")
        object.__setattr__(self, "ref_steps", _check_schedule("reference", self.ref_steps))
        object.__setattr__(self, "vob_steps", _check_schedule("v_ob", self.vob_steps))

    def step_for(self, params: ChargerParams) -> float:
        return self.h if self.h is not None else params.t_s / DEFAULT_STEPS_PER_PERIOD

    def event_times(self) -> list[float]:
        times = {t for t, _ in self.ref_steps} | {t for t, _ in self.vob_steps}
        return sorted(t for t in times if t < self.duration)


def reference_scenario(mode: str = "switched", h: float | None = None) -> Scenario:
    """Start from rest at 400 V, 30 A reference, step to 40 A at 60 ms,
    battery EMF drop from 450 V to 350 V at 90 ms, 120 ms horizon."""
    return Scenario(
        duration=0.12,
        i_l0=0.0,
        v_c0=400.0,
        v_d=800.0,
        ref_steps=((0.0, 30.0), (0.06, 40.0)),
        vob_steps=((0.0, 450.0), (0.09, 350.0)),
        mode=mode,
        h=h,
    )


TRACE_COLUMNS = ("t", "i_L", "v_C", "i_B", "d", "s_f", "v_OB", "i_B_ref")


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled run record.

    Sample ``n`` holds the state at ``t[n]`` together with the duty and switch
    position applied over ``[t[n], t[n] + h)``. In averaged mode ``s_f`` holds
    the duty, the averaged value of the switching function.
    """

    t: np.ndarray
    i_l: np.ndarray
    v_c: np.ndarray
    i_b: np.ndarray
    d: np.ndarray
    s_f: np.ndarray
    v_ob: np.ndarray
    i_b_ref: np.ndarray
    h: float
    t_s: float
    mode: str
    v_d: float
    params: ChargerParams = field(repr=False)
    cycle_averaged: bool = False

    def __len__(self) -> int:
        return len(self.t)

    @property
    def i_c(self) -> np.ndarray:
        return self.i_l - self.i_b

    @property
    def v_l(self) -> np.ndarray:
        k = coefficients(self.params)
        return self.s_f * self.v_d - k.g_c * self.v_c - k.g_b * self.v_ob - k.r_series * self.i_l

    def columns(self) -> list[np.ndarray]:
        return [self.t, self.i_l, self.v_c, self.i_b, self.d, self.s_f, self.v_ob, self.i_b_ref]

    def mask(self, t_start: float, t_end: float) -> np.ndarray:
        eps = 1e-9 * self.h
        return (self.t >= t_start - eps) & (self.t < t_end - eps)

    def window_means(self, t_start: float, t_end: float) -> dict[str, float]:
        m = self.mask(t_start, t_end)
        if not m.any():
            raise ValidationError(f"window [{t_start}, {t_end}) contains no samples")
        return {
            "i_l": float(self.i_l[m].mean()),
            "v_c": float(self.v_c[m].mean()),
            "i_b": float(self.i_b[m].mean()),
            "d": float(self.d[m].mean()),
            "s_f": float(self.s_f[m].mean()),
            "i_c": float(self.i_c[m].mean()),
            "v_l": float(self.v_l[m].mean()),
            "i_b_ref": float(self.i_b_ref[m].mean()),
        }


def _event_indices(steps: Sequence[tuple[float, float]], h: float) -> list[tuple[int, float]]:
    return [(int(math.ceil(t / h - 1e-9)), v) for t, v in steps]


def steps_per_period(t_s: float, h: float, tol: float = 1e-9) -> int:
    """Integer ``T_s/h``; raises if ``h`` does not divide the period."""
    ratio = t_s / h
    n = round(ratio)
    if n < 1 or abs(ratio - n) > tol * ratio:
        raise ValidationError(f"step {h!r} does not divide the switching period {t_s!r}")
    return int(n)


def run(
    params: ChargerParams,
    gains: PiGains | None,
    modulator: ModulatorConfig,
    scenario: Scenario,
    *,
    open_loop_duty: float | None = None,
) -> Trace:
    """Simulate ``scenario`` and return the full-resolution trace.

    With ``open_loop_duty`` set the controller is bypassed and the duty is
    held at that value.
    """
    h = scenario.step_for(params)
    div = steps_per_period(modulator.t_s, h) if scenario.mode == "switched" else 0
    if scenario.mode == "switched" and div < 100:
        raise ValidationError(f"switched mode needs h <= T_s/100, got T_s/{div}")
    op = steady_state(params, 0.5, scenario.v_d, scenario.vob_steps[0][1])
    lam_max = float(np.max(np.abs(eig2(linearize(params, op).a))))
    if not stable_step(lam_max, h):
        raise ValidationError(f"h = {h:.3g} s exceeds the RK4 safety bound 2/|lambda_max| = {2 / lam_max:.3g} s")
    if gains is None and open_loop_duty is None:
        raise ValidationError("need PI gains or an open-loop duty")
    if open_loop_duty is not None and not 0.0 <= open_loop_duty <= 1.0:
        raise ValidationError(f"open-loop duty must lie in [0, 1], got {open_loop_duty!r}")

    n_steps = int(round(scenario.duration / h))
    k = coefficients(params)
    g_c, g_b, g_cb, r_s = k.g_c, k.g_b, k.g_cb, k.r_series
    inv_l = 1.0 / params.inductance
    inv_c = 1.0 / params.capacitance
    v_d = scenario.v_d
    v_m = modulator.v_m
    d_min, d_max = modulator.d_min, modulator.d_max
    closed = open_loop_duty is None
    k_p = gains.k_p if closed else 0.0
    k_i = gains.k_i if closed else 0.0
    switched = scenario.mode == "switched"
    half_h = 0.5 * h
    sixth_h = h / 6.0

    ref_events = _event_indices(scenario.ref_steps, h)
    vob_events = _event_indices(scenario.vob_steps, h)
    ref_next, vob_next = 1, 1
    ref = ref_events[0][1]
    v_ob = vob_events[0][1]

    i_l = float(scenario.i_l0)
    v_c = float(scenario.v_c0)
    integrator = PiState().integrator
    d_fixed = open_loop_duty

    rec_i_l = [0.0] * n_steps
    rec_v_c = [0.0] * n_steps
    rec_i_b = [0.0] * n_steps
    rec_d = [0.0] * n_steps
    rec_s = [0.0] * n_steps
    rec_vob = [0.0] * n_steps
    rec_ref = [0.0] * n_steps

    for n in range(n_steps):
        while ref_next < len(ref_events) and ref_events[ref_next][0] <= n:
            ref = ref_events[ref_next][1]
            ref_next += 1
        while vob_next < len(vob_events) and vob_events[vob_next][0] <= n:
            v_ob = vob_events[vob_next][1]
            vob_next += 1

        i_b = i_l - (g_c * i_l - g_cb * (v_c - v_ob))
        if closed:
            # Same arithmetic as control.pi_step, inlined for speed.
            error = ref - i_b
            d_pre = k_p * error + integrator
            if not ((d_pre >= d_max and error > 0) or (d_pre <= d_min and error < 0)):
                integrator += k_i * error * h
            d = k_p * error + integrator
            d = d_min if d < d_min else (d_max if d > d_max else d)
        else:
            d = d_fixed

        if switched:
            u = 1.0 if d * v_m > v_m * ((n % div) / div) else 0.0
        else:
            u = d
        src = u * v_d - g_b * v_ob
        # RK4 on the affine plant with the input held over the step.
        a1 = (src - g_c * v_c - r_s * i_l) * inv_l
        b1 = (g_c * i_l - g_cb * (v_c - v_ob)) * inv_c
        il2 = i_l + half_h * a1
        vc2 = v_c + half_h * b1
        a2 = (src - g_c * vc2 - r_s * il2) * inv_l
        b2 = (g_c * il2 - g_cb * (vc2 - v_ob)) * inv_c
        il3 = i_l + half_h * a2
        vc3 = v_c + half_h * b2
        a3 = (src - g_c * vc3 - r_s * il3) * inv_l
        b3 = (g_c * il3 - g_cb * (vc3 - v_ob)) * inv_c
        il4 = i_l + h * a3
        vc4 = v_c + h * b3
        a4 = (src - g_c * vc4 - r_s * il4) * inv_l
        b4 = (g_c * il4 - g_cb * (vc4 - v_ob)) * inv_c

        rec_i_l[n] = i_l
        rec_v_c[n] = v_c
        rec_i_b[n] = i_b
        rec_d[n] = d
        rec_s[n] = u
        rec_vob[n] = v_ob
        rec_ref[n] = ref

        i_l += sixth_h * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        v_c += sixth_h * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if not (-_BLOWUP < i_l < _BLOWUP and -_BLOWUP < v_c < _BLOWUP):
            raise DivergenceError((n + 1) * h)

    return Trace(
        t=np.arange(n_steps) * h,
        i_l=np.array(rec_i_l),
        v_c=np.array(rec_v_c),
        i_b=np.array(rec_i_b),
        d=np.array(rec_d),
        s_f=np.array(rec_s),
        v_ob=np.array(rec_vob),
        i_b_ref=np.array(rec_ref),
        h=h,
        t_s=modulator.t_s,
        mode=scenario.mode,
        v_d=v_d,
        params=params,
    )


@dataclass(frozen=True)
class RippleReport:
    window: tuple[float, float]
    i_l_pp: float
    i_l_pct: float
    v_c_pp: float
    v_c_pct: float


def _check_window(trace: Trace, window: tuple[float, float]) -> np.ndarray:
    t0, t1 = window
    end = trace.t[-1] + trace.h
    if t0 < trace.t[0] - 1e-12 or t1 > end * (1 + 1e-12) or t1 <= t0:
        raise ValidationError(f"window [{t0}, {t1}) is outside the trace [{trace.t[0]}, {end})")
    return trace.mask(t0, t1)


def measure_ripple(trace: Trace, window: tuple[float, float]) -> RippleReport:
    """Peak-to-peak ripple of ``i_l`` and ``v_c`` over a steady window."""
    if window[1] - window[0] < 10 * trace.t_s * (1 - 1e-9):
        raise ValidationError("ripple window must span at least 10 switching periods")
    m = _check_window(trace, window)
    i_l = trace.i_l[m]
    v_c = trace.v_c[m]
    i_pp = float(np.ptp(i_l))
    v_pp = float(np.ptp(v_c))
    return RippleReport(
        window=(float(window[0]), float(window[1])),
        i_l_pp=i_pp,
        i_l_pct=100.0 * i_pp / abs(float(i_l.mean())),
        v_c_pp=v_pp,
        v_c_pct=100.0 * v_pp / abs(float(v_c.mean())),
    )


@dataclass(frozen=True)
class SettlingReport:
    event_t: float
    final: float
    settling_time: float | None  # seconds after event_t; None when unsettled
    peak_value: float
    peak_time: float
    band_fraction: float

    @property
    def settled(self) -> bool:
        return self.settling_time is not None


def settling_time(
    trace: Trace,
    event_t: float,
    band_fraction: float = 0.02,
    t_end: float | None = None,
    final: float | None = None,
) -> SettlingReport:
    """Settling of ``i_b`` after ``event_t``.

    ``final`` defaults to the mean over the last tenth of ``[event_t, t_end)``.
    The settling time is measured to the first sample after which ``i_b``
    never leaves ``final +- band_fraction*|final|`` before ``t_end``.
    """
    if not 0 < band_fraction < 1:
        raise ValidationError(f"band_fraction must lie in (0, 1), got {band_fraction!r}")
    t_end = trace.t[-1] + trace.h if t_end is None else t_end
    m = _check_window(trace, (event_t, t_end))
    t = trace.t[m]
    y = trace.i_b[m]
    if final is None:
        tail = y[int(0.9 * len(y)):]
        final = float(tail.mean())
    excursion = np.abs(y - final)
    peak = int(np.argmax(excursion))
    outside = excursion > band_fraction * abs(final)
    if not outside.any():
        settle = 0.0
    elif outside[-1]:
        settle = None
    else:
        last = int(np.nonzero(outside)[0][-1])
        settle = float(t[last + 1] - event_t)
    return SettlingReport(
        event_t=float(event_t),
        final=final,
        settling_time=settle,
        peak_value=float(y[peak]),
        peak_time=float(t[peak]),
        band_fraction=band_fraction,
    )


def cycle_average(trace: Trace) -> Trace:
    """Boxcar average over each switching period, one sample per period.

    Sample ``k`` averages ``[k*T_s, (k+1)*T_s)`` and is stamped at the period
    end. Trailing partial periods are dropped.
    """
    div = steps_per_period(trace.t_s, trace.h)
    periods = len(trace) // div
    if periods == 0:
        raise ValidationError("trace is shorter than one switching period")
    if abs(trace.t[0]) > 1e-9 * trace.h:
        raise ValidationError("trace grid does not start on a period boundary")

    def avg(x: np.ndarray) -> np.ndarray:
        return x[: periods * div].reshape(periods, div).mean(axis=1)

    return Trace(
        t=(np.arange(periods) + 1) * trace.t_s,
        i_l=avg(trace.i_l),
        v_c=avg(trace.v_c),
        i_b=avg(trace.i_b),
        d=avg(trace.d),
        s_f=avg(trace.s_f),
        v_ob=avg(trace.v_ob),
        i_b_ref=avg(trace.i_b_ref),
        h=trace.t_s,
        t_s=trace.t_s,
        mode=trace.mode,
        v_d=trace.v_d,
        params=trace.params,
        cycle_averaged=True,
    )


def segments(scenario: Scenario) -> list[tuple[float, float]]:
    """Intervals between consecutive schedule events."""
    bounds = scenario.event_times() + [scenario.duration]
    return list(zip(bounds[:-1], bounds[1:]))


def steady_windows(scenario: Scenario) -> list[tuple[float, float]]:
    """Closing window of each segment: the last 10 ms, or its second half if shorter."""
    out = []
    for start, end in segments(scenario):
        width = min(STEADY_WINDOW, 0.5 * (end - start))
        out.append((end - width, end))
    return out


def summarize(trace: Trace, scenario: Scenario, band_fraction: float = 0.02) -> dict:
    """Window means, ripple, and settling for every schedule segment."""
    report = {"mode": trace.mode, "h": trace.h, "t_s": trace.t_s, "segments": []}
    for (start, end), window in zip(segments(scenario), steady_windows(scenario)):
        means = trace.window_means(*window)
        entry = {
            "start": start,
            "end": end,
            "window": list(window),
            "means": means,
            "error_pct": 100.0 * (means["i_b_ref"] - means["i_b"]) / abs(means["i_b_ref"]),
        }
        if window[1] - window[0] >= 10 * trace.t_s:
            r = measure_ripple(trace, window)
            entry["ripple"] = {
                "i_l_pp": r.i_l_pp,
                "i_l_pct": r.i_l_pct,
                "v_c_pp": r.v_c_pp,
                "v_c_pct": r.v_c_pct,
            }
        s = settling_time(trace, start, band_fraction, t_end=end)
        entry["settling"] = {
            "final": s.final,
            "settling_time": s.settling_time,
            "peak_value": s.peak_value,
            "peak_time": s.peak_time,
            "band_fraction": s.band_fraction,
        }
        report["segments"].append(entry)
    return report
