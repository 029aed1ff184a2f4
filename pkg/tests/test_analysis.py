import math

import numpy as np
import pytest

import oracles
from charger2l.analysis import (
    RationalTransferFunction,
    SurfaceFixed,
    closed_loop,
    control_to_battery_tf,
    crossover_frequency,
    dc_gain_closed_form,
    default_axis,
    efficiency,
    frequency_response,
    min_capacitance,
    min_inductance,
    printed_efficiency,
    root_locus,
    settling_time,
    step_response,
    surface,
)
from charger2l.control import loop_gain
from charger2l.errors import DegeneratePolynomialError, NoCrossingError, ValidationError
from charger2l.model import OperatingPoint, linearize, reference_params, steady_state


@pytest.fixture
def op(params):
    return steady_state(params, 0.9, 800.0, 450.0)


def test_tf_matches_state_space_oracle(params, op, plant):
    for f in (0.1, 34.0, 1e3, 6.4e5, 1e7):
        s = 2j * math.pi * f
        ref, _ = oracles.transfer_at(params, op, s)
        assert abs(plant(s) - ref) <= 1e-9 * abs(ref)


def test_tf_poles_zero_and_gain(plant, params, op):
    poles = sorted(p.real for p in plant.poles)
    assert poles[0] == pytest.approx(-3.99996e6, rel=1e-5)
    assert poles[1] == pytest.approx(-214.2128, rel=1e-6)
    assert plant.zeros[0].real == pytest.approx(-1 / (params.r_c * params.capacitance))
    assert plant.k == pytest.approx(800.0 / (params.r_b + params.r_in), rel=1e-12)
    assert dc_gain_closed_form(params, 800.0, plant) == pytest.approx(plant.k, rel=1e-12)


def test_tf_does_not_depend_on_operating_point(params, plant):
    other = control_to_battery_tf(linearize(params, steady_state(params, 0.3, 800.0, 100.0)))
    assert other.k == pytest.approx(plant.k, rel=1e-14)


def test_polynomial_roundtrip():
    tf = RationalTransferFunction.from_polynomials([2.0, 6.0], [1.0, 3.0, 2.0])
    assert tf.k == pytest.approx(3.0)
    np.testing.assert_allclose(tf.numerator() / tf.denominator()[0], [2.0, 6.0], rtol=1e-12)
    s = 1.5j
    assert tf(s) == pytest.approx((2 * s + 6) / (s * s + 3 * s + 2))


def test_integrator_pole_bode_gain():
    tf = RationalTransferFunction(5.0, [-2.0], [0.0])
    s = 3j
    assert tf(s) == pytest.approx(5.0 * (1 + s / 2) / s)
    assert tf.origin_order == 1


def test_bode_phase_is_continuous(plant):
    fr = frequency_response(plant, 1e-2, 1e9, 50)
    assert np.all(np.abs(np.diff(fr.phase_deg)) < 10.0)
    assert fr.phase_deg[0] == pytest.approx(0.0, abs=0.5)
    assert fr.phase_deg[-1] == pytest.approx(-90.0, abs=1.0)


def test_bode_matches_direct_evaluation(plant):
    fr = frequency_response(plant, 10.0, 1e7, 7)
    direct = plant(2j * math.pi * fr.f_hz)
    np.testing.assert_allclose(fr.mag_db, 20 * np.log10(np.abs(direct)), atol=1e-9)
    np.testing.assert_allclose(fr.phase_deg, np.degrees(np.angle(direct)), atol=1e-7)


def test_crossover_uncompensated_against_bisection(params, op, plant):
    fc = crossover_frequency(frequency_response(plant, 1.0, 1e8, 200)).f_hz
    ref = oracles.crossover_bisect(lambda f: oracles.loop_at(params, op, None, 1.0, f), 1.0, 1e8)
    assert isinstance(fc, float)
    assert fc == pytest.approx(ref, rel=2e-3)


def test_crossover_errors():
    flat = RationalTransferFunction(0.5, [], [])
    with pytest.raises(NoCrossingError):
        crossover_frequency(frequency_response(flat, 1, 1e3))
    unity = frequency_response(RationalTransferFunction(1.0, [], []), 1, 1e3)
    assert crossover_frequency(unity).degenerate


def test_closed_loop_poles_against_augmented_state_space(params, op, plant, gains):
    _, den = closed_loop(loop_gain(gains, plant))
    ours = np.sort_complex(np.roots(den))
    ref = np.sort_complex(oracles.closed_loop_poles(params, op, gains, 1.0))
    np.testing.assert_allclose(ours, ref, rtol=1e-6)
    assert np.all(ours.real < 0)


def test_root_locus_limits(plant, gains):
    loop = loop_gain(gains, plant)
    (k, small), = root_locus(loop, [1e-14])
    open_poles = np.sort_complex(np.array(loop.poles))
    np.testing.assert_allclose(np.sort_complex(small), open_poles, rtol=1e-4, atol=1e-3)
    (k, unit), = root_locus(loop, [1.0])
    _, den = closed_loop(loop)
    np.testing.assert_allclose(np.sort_complex(unit), np.sort_complex(np.roots(den)), rtol=1e-9)
    with pytest.raises(ValidationError):
        root_locus(loop, [0.0])


def test_root_locus_degenerate_leading_coefficient():
    # den = s + 1, num = -(s) -> K = 1 cancels the s term
    tf = RationalTransferFunction.from_polynomials([-1.0, 0.0], [1.0, 1.0])
    with pytest.raises(DegeneratePolynomialError):
        root_locus(tf, [1.0])


def test_step_response_first_order():
    # T = a/s gives a closed loop a/(s+a): y = 1 - exp(-a t)
    a = 50.0
    loop = RationalTransferFunction(a, [], [0.0])
    data = step_response(loop, 0.1, 1e-3)
    t = np.array([r[0] for r in data])
    y = np.array([r[1] for r in data])
    np.testing.assert_allclose(y, 1 - np.exp(-a * t), atol=1e-8)
    ts = settling_time(t, y, 0.02, final=1.0)
    assert ts == pytest.approx(-math.log(0.02) / a, abs=1e-3)


def test_step_response_designed_loop(plant, gains):
    data = step_response(loop_gain(gains, plant), 2e-5, 1e-8)
    y = np.array([r[1] for r in data])
    assert y[0] == 0.0
    assert y[-1] == pytest.approx(1.0, abs=1e-3)


def test_step_response_warns_when_unstable():
    loop = RationalTransferFunction(-2.0, [], [-1.0])
    with pytest.warns(RuntimeWarning):
        step_response(loop, 1.0, 0.1)


def test_efficiency_identities(params):
    op = steady_state(params, 0.9, 800.0, 450.0)
    rep = efficiency(params, op)
    assert rep.eta_physical == pytest.approx(rep.a_v1 / op.duty)
    assert rep.eta_physical == pytest.approx(rep.p_out_terminal / rep.p_in)
    assert 0 < rep.eta_physical < 1
    assert not rep.printed_is_physical
    assert math.isnan(printed_efficiency(params.replace(r_ds_on=0.0, r_l=0.0), 0.9, 0.7, 1.2))
    with pytest.raises(ValidationError):
        efficiency(params, steady_state(params, 0.0, 800.0, 450.0))


def test_efficiency_reference_point(params):
    rep = efficiency(params, steady_state(params, 0.9, 800.0, 450.0))
    # explicit power products at the equilibrium
    i_l, v_c = oracles.equilibrium_exact(params, 0.9, 800.0, 450.0)
    assert rep.p_in == pytest.approx(0.9 * 800.0 * i_l, rel=1e-12)
    assert rep.p_out_terminal == pytest.approx(v_c * i_l, rel=1e-12)
    assert rep.p_out_emf == pytest.approx(450.0 * i_l, rel=1e-12)
    assert rep.eta_physical == pytest.approx(0.8093, abs=1e-4)
    assert rep.eta_printed == pytest.approx(2.12, abs=5e-3)


def test_lossless_efficiency_is_one(params):
    p = params.replace(r_ds_on=0.0, r_l=0.0)
    assert efficiency(p, steady_state(p, 0.7, 800.0, 450.0)).eta_physical == pytest.approx(1.0)


def test_min_inductance_against_oracle(params):
    op = steady_state(params, 0.9, 800.0, 450.0)
    res = min_inductance(params, op, 0.14)
    assert res.value == pytest.approx(oracles.l_min(params, 0.9, 800.0, 450.0, 0.14), rel=1e-12)
    assert res.feasible
    with pytest.raises(ValidationError):
        min_inductance(params, op, 0.0)


def test_min_capacitance_against_oracle(params):
    res = min_capacitance(params, 400.0, 450.0, 30.0, 0.9, 0.02)
    assert res.value == pytest.approx(oracles.c_min(params, 0.9, 400.0, 450.0, 30.0, 0.02), rel=1e-12)
    assert not res.degenerate


def test_min_capacitance_degenerate_at_equilibrium(params):
    op = steady_state(params, 0.9, 800.0, 450.0)
    res = min_capacitance(params, op.v_c, op.v_ob, op.i_l, op.duty, 0.02)
    assert res.degenerate and res.value == 0.0


def test_default_axis():
    axis = default_axis()
    assert len(axis) == 91
    assert axis[0] == pytest.approx(1e-6) and axis[-1] == pytest.approx(1e3)


def test_surface_c_min_uses_r_c_axis():
    axis = default_axis(1e-3, 1e1, 2)
    grid = surface("c_min", axis, axis)
    assert (grid.x_name, grid.y_name) == ("r_c", "r_l")
    assert grid.values.shape == (len(axis), len(axis))


def test_surface_rejects_unknown_quantity():
    with pytest.raises(ValidationError):
        surface("bogus")


def test_surface_fixed_defaults():
    f = SurfaceFixed()
    assert (f.duty, f.v_ob, f.delta_i_l, f.v_c) == (0.9, 450.0, 0.14, 400.0)
    assert f.params(r_l=2.0).r_l == 2.0


def test_operating_point_independent_sizing():
    # a hand-built point where the on-interval inductor voltage is negative
    p = reference_params()
    op = OperatingPoint(0.5, 100.0, 450.0, 10.0, 460.0, 10.0)
    assert not min_inductance(p, op, 1.0).feasible
