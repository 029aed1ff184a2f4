"""Command-line entry point: ``charger2l <subcommand> [options]``.

Exit status is 0 on success, 1 on validation errors (bad config, bad
arguments, infeasible requests) and 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .config import LoadedConfig, default_config_path, load_config
from .control import PiGains, design_pi, loop_gain
from .errors import NumericError, ValidationError
from .model import (
    INPUT_NAMES,
    OUTPUT_NAMES,
    STATE_NAMES,
    OperatingPoint,
    duty_for_current,
    linearize,
    steady_state,
)
from .output import atomic_write_text, csv_text, fmt, json_text, write_csv, write_json
from .sim import TRACE_COLUMNS, run, summarize

BODE_HEADER = ("f_hz", "mag_db", "phase_deg")
ROOT_LOCUS_HEADER = ("k", "re", "im")
STEP_HEADER = ("t", "y")
SURFACE_HEADER = ("x", "y", "value")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _operating_point(cfg: LoadedConfig, args) -> OperatingPoint:
    v_ob = cfg.scenario.vob_steps[0][1] if args.vob is None else args.vob
    v_d = cfg.scenario.v_d
    if args.duty is not None:
        return steady_state(cfg.params, args.duty, v_d, v_ob)
    i_b = cfg.scenario.ref_steps[0][1] if args.ib is None else args.ib
    return duty_for_current(cfg.params, i_b, v_d, v_ob)


def _plant(cfg: LoadedConfig, op: OperatingPoint | None = None) -> analysis.RationalTransferFunction:
    op = op or cfg.reference_point
    return analysis.control_to_battery_tf(linearize(cfg.params, op))


def _gains(cfg: LoadedConfig) -> tuple[PiGains, bool]:
    if cfg.gains is not None:
        return cfg.gains, False
    return design_pi(_plant(cfg), cfg.params.f_s, cfg.omega_convention, cfg.params.v_m), True


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def _matrix(name: str, m: np.ndarray, rows, cols) -> list[str]:
    lines = [f"{name}  [{' '.join(cols)}]"]
    for label, row in zip(rows, m):
        lines.append(f"  {label:>5}: " + "  ".join(f"{fmt(v):>16}" for v in row))
    return lines


def _complex(z: complex) -> str:
    if z.imag == 0:
        return fmt(z.real)
    return f"{fmt(z.real)}{'+' if z.imag >= 0 else '-'}{fmt(abs(z.imag))}j"


def cmd_steady_state(cfg: LoadedConfig, args) -> None:
    op = _operating_point(cfg, args)
    doc = op.as_dict()
    for key, value in doc.items():
        print(f"{key}={fmt(value)}")
    if args.efficiency:
        rep = analysis.efficiency(cfg.params, op)
        eff = {
            "eta_physical": rep.eta_physical,
            "eta_printed": rep.eta_printed,
            "p_in": rep.p_in,
            "p_out_terminal": rep.p_out_terminal,
            "p_out_emf": rep.p_out_emf,
            "a_v1": rep.a_v1,
            "a_v2": rep.a_v2,
        }
        for key, value in eff.items():
            print(f"{key}={fmt(value)}")
        if not rep.printed_is_physical:
            print("# eta_printed lies outside (0, 1]; eta_physical is the meaningful figure")
        doc = {"operating_point": doc, "efficiency": eff}
    sys.stdout.write(json_text(doc))


def cmd_linearize(cfg: LoadedConfig, args) -> None:
    op = _operating_point(cfg, args)
    m = linearize(cfg.params, op)
    lines = [f"operating point: duty={fmt(op.duty)} i_l={fmt(op.i_l)} A v_c={fmt(op.v_c)} V"]
    lines += _matrix("A", m.a, STATE_NAMES, STATE_NAMES)
    lines += _matrix("B", m.b, STATE_NAMES, INPUT_NAMES)
    lines += _matrix("C", m.c, OUTPUT_NAMES, STATE_NAMES)
    lines += _matrix("D", m.d, OUTPUT_NAMES, INPUT_NAMES)
    lines.append("eigenvalues: " + ", ".join(_complex(z) for z in m.eigenvalues()))
    print("\n".join(lines))


def cmd_tf(cfg: LoadedConfig, args) -> None:
    op = _operating_point(cfg, args)
    tf = _plant(cfg, op)
    k_closed = analysis.dc_gain_closed_form(cfg.params, op.v_d, tf)
    print(f"k={fmt(tf.k)}")
    print("zeros_rad_s=" + ",".join(_complex(z) for z in tf.zeros))
    print("poles_rad_s=" + ",".join(_complex(p) for p in tf.poles))
    print(f"k_closed_form={fmt(k_closed)}")
    print(f"k_relative_difference={fmt(abs(k_closed - tf.k) / abs(tf.k))}")


def _crossover_text(loop, f_min=1.0, f_max=1e9) -> str:
    fr = analysis.frequency_response(loop, f_min, f_max, 200)
    try:
        fc = analysis.crossover_frequency(fr).f_hz
    except NumericError:
        return "none in range"
    return f"{fmt(fc)} Hz ({fc / 1e3:.4g} kHz)"


def cmd_design(cfg: LoadedConfig, args) -> None:
    plant = _plant(cfg)
    gains, designed = _gains(cfg)
    v_m = cfg.params.v_m
    print(f"k_p={fmt(gains.k_p)}")
    print(f"tau_i={fmt(gains.tau_i)}")
    print(f"# gains {'designed' if designed else 'taken from config'} (omega convention {cfg.omega_convention})")
    print(f"uncompensated_crossover: {_crossover_text(loop_gain(None, plant, v_m))}")
    print(f"compensated_crossover: {_crossover_text(loop_gain(gains, plant, v_m))}")
    num, den = analysis.closed_loop(loop_gain(gains, plant, v_m))
    poles = np.roots(den)
    print("closed_loop_poles_rad_s=" + ",".join(_complex(p) for p in poles))
    print(f"stable={'yes' if np.all(poles.real < 0) else 'no'}")


def cmd_bode(cfg: LoadedConfig, args) -> None:
    plant = _plant(cfg)
    gains = _gains(cfg)[0] if args.compensated else None
    loop = loop_gain(gains, plant, cfg.params.v_m)
    fr = analysis.frequency_response(loop, args.fmin, args.fmax, args.ppd)
    _emit(csv_text(BODE_HEADER, fr.rows()), args.out)
    if args.out is not None:
        print(f"crossover: {_crossover_text(loop, args.fmin, args.fmax)}")


def cmd_rootlocus(cfg: LoadedConfig, args) -> None:
    if not 0 < args.kmin < args.kmax:
        raise ValidationError("need 0 < kmin < kmax")
    if args.points < 2:
        raise ValidationError("need at least 2 points")
    gains = _gains(cfg)[0]
    loop = loop_gain(gains, _plant(cfg), cfg.params.v_m)
    grid = np.logspace(math.log10(args.kmin), math.log10(args.kmax), args.points)
    if args.kmin <= 1.0 <= args.kmax:
        grid = np.unique(np.append(grid, 1.0))
    rows = []
    for k, poles in analysis.root_locus(loop, grid):
        rows.extend((k, p.real, p.imag) for p in poles)
    _emit(csv_text(ROOT_LOCUS_HEADER, rows), args.out)


def cmd_step(cfg: LoadedConfig, args) -> None:
    gains = _gains(cfg)[0]
    loop = loop_gain(gains, _plant(cfg), cfg.params.v_m)
    data = analysis.step_response(loop, args.horizon, args.dt)
    _emit(csv_text(STEP_HEADER, data), args.out)
    if args.out is not None:
        t, y = zip(*data)
        ts = analysis.settling_time(t, y, 0.02, final=1.0)
        print("settling_time_2pct=" + ("unsettled" if ts is None else f"{fmt(ts)} s ({ts * 1e3:.4g} ms)"))


def cmd_simulate(cfg: LoadedConfig, args) -> None:
    if args.every < 1:
        raise ValidationError("--every must be >= 1")
    scenario = cfg.scenario
    if args.mode is not None:
        scenario = dataclasses.replace(scenario, mode=args.mode)
    gains, _ = _gains(cfg)
    trace = run(cfg.params, gains, cfg.modulator, scenario)
    rows = np.column_stack([c[:: args.every] for c in trace.columns()])
    write_csv(args.out, TRACE_COLUMNS, rows.tolist())
    metrics = summarize(trace, scenario)
    metrics["gains"] = {"k_p": gains.k_p, "tau_i": gains.tau_i}
    write_json(args.metrics, metrics)
    for seg in metrics["segments"]:
        m = seg["means"]
        st = seg["settling"]["settling_time"]
        print(
            f"[{seg['start'] * 1e3:g}, {seg['end'] * 1e3:g}) ms: "
            f"i_b={m['i_b']:.4f} A (ref {m['i_b_ref']:g}), v_c={m['v_c']:.3f} V, "
            f"duty={m['s_f']:.4f}, settling="
            + ("unsettled" if st is None else f"{st * 1e3:.4g} ms")
        )


def cmd_sizing(cfg: LoadedConfig, args) -> None:
    op = _operating_point(cfg, args)
    l_res = analysis.min_inductance(cfg.params, op, cfg.delta_i_l)
    v_c = op.v_c if args.vc is None else args.vc
    i_l = op.i_l if args.il is None else args.il
    c_res = analysis.min_capacitance(cfg.params, v_c, op.v_ob, i_l, op.duty, cfg.delta_v_c)
    print(f"delta_i_l={fmt(cfg.delta_i_l)}  # A")
    print(f"delta_v_c={fmt(cfg.delta_v_c)}  # V")
    print(f"l_min={fmt(l_res.value)}  # H ({l_res.value * 1e3:.4g} mH)" + ("" if l_res.feasible else "  INFEASIBLE"))
    note = "  # degenerate: capacitor current bracket <= 0" if c_res.degenerate else f"  # F ({c_res.value * 1e3:.4g} mF)"
    print(f"c_min={fmt(c_res.value)}{note}")


def cmd_sweep(cfg: LoadedConfig, args) -> None:
    p = cfg.params
    fixed = analysis.SurfaceFixed(
        v_d=cfg.scenario.v_d,
        r_ds_on=p.r_ds_on,
        r_l=p.r_l,
        r_c=p.r_c,
        r_b=p.r_b,
        inductance=p.inductance,
        capacitance=p.capacitance,
        f_s=p.f_s,
        v_c=None if args.vc_equilibrium else analysis.SurfaceFixed.v_c,
    )
    axis = analysis.default_axis(args.lo, args.hi, args.ppd)
    grid = analysis.surface(args.quantity, axis, axis, fixed, printed=args.printed)
    rows = [
        (grid.x[i], grid.y[j], grid.values[i, j])
        for i in range(len(grid.x))
        for j in range(len(grid.y))
    ]
    write_csv(args.out, SURFACE_HEADER, rows)
    i, j = grid.argmax()
    print(f"x={grid.x_name} y={grid.y_name} points={grid.values.size} flagged={int(grid.flags.sum())}")
    print(f"max {fmt(grid.values[i, j])} {grid.unit} at x={fmt(grid.x[i])}, y={fmt(grid.y[j])}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="charger2l", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--config", default=None, help="INI config (default: bundled reference charger)")

    op = _Parser(add_help=False)
    group = op.add_mutually_exclusive_group()
    group.add_argument("--duty", type=float, help="operating duty cycle")
    group.add_argument("--ib", type=float, help="battery current to solve the duty for")
    op.add_argument("--vob", type=float, help="battery EMF (default: first scheduled value)")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("steady-state", parents=[common, op], help="DC operating point")
    p.add_argument("--efficiency", action="store_true", help="also report efficiency")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("linearize", parents=[common, op], help="small-signal matrices")
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("tf", parents=[common, op], help="duty-to-battery-current transfer function")
    p.set_defaults(func=cmd_tf)

    p = sub.add_parser("design", parents=[common], help="PI gains and loop crossovers")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("bode", parents=[common], help="loop-gain frequency response CSV")
    p.add_argument("--compensated", action="store_true")
    p.add_argument("--fmin", type=float, default=1.0)
    p.add_argument("--fmax", type=float, default=1e8)
    p.add_argument("--ppd", type=int, default=50, help="points per decade")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bode)

    p = sub.add_parser("rootlocus", parents=[common], help="closed-loop poles versus loop gain CSV")
    p.add_argument("--kmin", type=float, default=1e-3)
    p.add_argument("--kmax", type=float, default=1e3)
    p.add_argument("--points", type=int, default=61)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rootlocus)

    p = sub.add_parser("step", parents=[common], help="closed-loop unit-step response CSV")
    p.add_argument("--horizon", type=float, default=0.05)
    p.add_argument("--dt", type=float, default=1e-6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_step)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop time-domain run")
    p.add_argument("--out", default="trace.csv")
    p.add_argument("--metrics", default="metrics.json")
    p.add_argument("--mode", choices=("switched", "averaged"))
    p.add_argument("--every", type=int, default=1, help="keep every N-th sample in the CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sizing", parents=[common, op], help="minimum L and C")
    p.add_argument("--vc", type=float, help="capacitor voltage for the C bound")
    p.add_argument("--il", type=float, help="inductor current for the C bound")
    p.set_defaults(func=cmd_sizing)

    p = sub.add_parser("sweep", parents=[common], help="resistance-sweep surface CSV")
    p.add_argument("--quantity", required=True, choices=analysis.QUANTITIES)
    p.add_argument("--out", default="surface.csv")
    p.add_argument("--lo", type=float, default=1e-6)
    p.add_argument("--hi", type=float, default=1e3)
    p.add_argument("--ppd", type=int, default=10, help="points per decade")
    p.add_argument("--printed", action="store_true", help="eta: use the printed closed-form expression")
    p.add_argument("--vc-equilibrium", action="store_true", help="sizing: use equilibrium v_c instead of 400 V")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(Path(args.config) if args.config else default_config_path())
        args.func(cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
