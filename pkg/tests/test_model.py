import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from charger2l.errors import InfeasibleOperatingPointError, ValidationError
from charger2l.model import (
    ChargerParams,
    ConverterState,
    ExternalInputs,
    OperatingPoint,
    SwitchState,
    coefficients,
    duty_for_current,
    eig2,
    equilibrium_residuals,
    linearize,
    reference_params,
    parallel,
    rhs_averaged,
    rhs_switched,
    steady_state,
)

resistance = st.floats(1e-4, 10.0)
charger = st.builds(
    ChargerParams,
    r_ds_on=st.floats(0.0, 1.0),
    r_l=st.floats(0.0, 5.0),
    r_c=resistance,
    r_b=resistance,
    inductance=st.floats(1e-5, 1e-1),
    capacitance=st.floats(1e-9, 1e-3),
    f_s=st.floats(1e3, 1e5),
)


def test_reference_params():
    p = reference_params()
    assert p.r_in == pytest.approx(1.035)
    assert p.t_s == pytest.approx(1 / 27e3)
    assert p.r_p == pytest.approx(0.6)


def test_params_validation():
    p = reference_params()
    with pytest.raises(ValidationError):
        p.replace(r_b=-1.0)
    with pytest.raises(ValidationError):
        p.replace(r_b=0.0, r_c=0.0)
    with pytest.raises(ValidationError):
        p.replace(inductance=0.0)
    with pytest.raises(ValidationError):
        p.replace(f_s=math.nan)


def test_parallel_limits():
    assert parallel(1.0, 1.0) == 0.5
    assert parallel(0.0, 3.0) == 0.0
    with pytest.raises(ValidationError):
        parallel(0.0, 0.0)


def test_switch_state():
    assert SwitchState(1).complement == 0
    with pytest.raises(ValidationError):
        SwitchState(2)


@given(charger, st.floats(-100, 100), st.floats(0, 1000), st.floats(0, 1000), st.floats(0, 1000))
def test_switched_rhs_matches_node_equations(p, i_l, v_c, v_d, v_ob):
    for s in (0, 1):
        deriv, out = rhs_switched(p, ConverterState(i_l, v_c), ExternalInputs(v_d, v_ob), SwitchState(s))
        di, dv, i_b = oracles.derivatives(p, i_l, v_c, s * v_d, v_ob)
        # absolute floors sized by the largest term in each sum
        i_scale = abs(i_l) + (abs(v_c) + abs(v_ob)) / min(p.r_b, p.r_c)
        v_scale = abs(v_d) + abs(v_c) + abs(v_ob) + p.r_in * abs(i_l)
        assert deriv.di_l == pytest.approx(di, rel=1e-9, abs=1e-9 * v_scale / p.inductance)
        assert deriv.dv_c == pytest.approx(dv, rel=1e-9, abs=1e-9 * i_scale / p.capacitance)
        assert out.i_b == pytest.approx(i_b, rel=1e-9, abs=1e-9 * i_scale)
        assert out.i_b + out.i_c == pytest.approx(i_l, rel=1e-12, abs=1e-9 * (1 + abs(out.i_b)))


def test_averaged_rhs_interpolates_switched():
    p = reference_params()
    x, u = ConverterState(12.0, 470.0), ExternalInputs(800.0, 450.0)
    on = rhs_switched(p, x, u, SwitchState(1))[0]
    off = rhs_switched(p, x, u, SwitchState(0))[0]
    avg = rhs_averaged(p, x, u, 0.3)
    assert avg.di_l == pytest.approx(0.3 * on.di_l + 0.7 * off.di_l)
    assert avg.dv_c == pytest.approx(0.3 * on.dv_c + 0.7 * off.dv_c)
    with pytest.raises(ValidationError):
        rhs_averaged(p, x, u, 1.2)


def test_r_c_zero_is_supported():
    p = reference_params().replace(r_c=0.0)
    k = coefficients(p)
    assert k.g_c == 1.0 and k.g_b == 0.0
    op = steady_state(p, 0.7, 800.0, 450.0)
    assert max(map(abs, equilibrium_residuals(p, op))) < 1e-12


def test_steady_state_reference_point():
    op = steady_state(reference_params(), 0.9, 800.0, 450.0)
    i_l, v_c = oracles.equilibrium_exact(reference_params(), 0.9, 800.0, 450.0)
    assert op.v_c == pytest.approx(v_c, rel=1e-13)
    assert op.i_l == pytest.approx(i_l, rel=1e-13)
    assert op.i_b == op.i_l
    assert op.v_c == pytest.approx(582.678133, rel=1e-8)


@settings(max_examples=300)
@given(charger, st.floats(0.0, 1.0), st.floats(1.0, 1000.0), st.floats(0.0, 1000.0))
def test_steady_state_against_exact_solve(p, duty, v_d, v_ob):
    op = steady_state(p, duty, v_d, v_ob)
    i_l, v_c = oracles.equilibrium_exact(p, duty, v_d, v_ob)
    scale_i = max(abs(i_l), (duty * v_d + v_ob) / (p.r_in + p.r_b))
    assert op.v_c == pytest.approx(v_c, rel=1e-12, abs=1e-12 * (duty * v_d + v_ob))
    assert op.i_l == pytest.approx(i_l, rel=1e-12, abs=1e-12 * scale_i)
    assert max(map(abs, equilibrium_residuals(p, op))) < 1e-12


def test_steady_state_requires_battery_resistance():
    with pytest.raises(ValidationError):
        steady_state(reference_params().replace(r_b=0.0), 0.5, 800.0, 450.0)


@pytest.mark.parametrize("i_b", [30.0, 40.0, -5.0, 0.0])
def test_duty_for_current_roundtrip(i_b):
    p = reference_params()
    op = duty_for_current(p, i_b, 800.0, 450.0)
    back = steady_state(p, op.duty, 800.0, 450.0)
    assert back.i_b == pytest.approx(i_b, abs=1e-9)


def test_duty_for_current_infeasible():
    with pytest.raises(InfeasibleOperatingPointError):
        duty_for_current(reference_params(), 500.0, 800.0, 450.0)
    with pytest.raises(InfeasibleOperatingPointError):
        duty_for_current(reference_params(), -500.0, 800.0, 450.0)


def _fd_jacobian(p, op, eps=1e-6):
    """Central differences of the averaged dynamics w.r.t. (i_l, v_c) and (v_d, v_ob, d)."""

    def f(z):
        i_l, v_c, v_d, v_ob, d = z
        deriv = rhs_averaged(p, ConverterState(i_l, v_c), ExternalInputs(v_d, v_ob), d)
        _, out = rhs_switched(p, ConverterState(i_l, v_c), ExternalInputs(v_d, v_ob), SwitchState(1))
        return np.array([deriv.di_l, deriv.dv_c, i_l, v_c, out.i_b])

    z0 = np.array([op.i_l, op.v_c, op.v_d, op.v_ob, op.duty])
    jac = np.empty((5, 5))
    for k in range(5):
        step = eps * max(1.0, abs(z0[k]))
        if k == 4:
            step = min(step, op.duty, 1 - op.duty) if 0 < op.duty < 1 else step
        up, dn = z0.copy(), z0.copy()
        up[k] += step
        dn[k] -= step
        jac[:, k] = (f(up) - f(dn)) / (2 * step)
    return jac


def _compare_jacobian(p, op, rtol=1e-6):
    m = linearize(p, op)
    fd = _fd_jacobian(p, op)
    analytic = np.block([[m.a, m.b], [m.c, m.d]])
    scale = np.maximum(np.abs(analytic), 1e-9 * np.max(np.abs(analytic), axis=1, keepdims=True))
    return np.max(np.abs(fd - analytic) / scale), analytic, fd


def test_linearize_reference_point():
    p = reference_params()
    op = steady_state(p, 0.9, 800.0, 450.0)
    m = linearize(p, op)
    assert m.a[0, 0] == pytest.approx(-(1.035 + 0.6) / 9.5e-3)
    assert m.b[0, 2] == pytest.approx(800.0 / 9.5e-3)
    assert m.c[2].tolist() == pytest.approx([0.6, 0.4])
    assert m.d[2, 1] == pytest.approx(-0.4)
    err, _, _ = _compare_jacobian(p, op)
    assert err < 1e-6


def test_state_space_arrays_are_read_only():
    m = linearize(reference_params(), steady_state(reference_params(), 0.5, 800.0, 450.0))
    with pytest.raises(ValueError):
        m.a[0, 0] = 1.0


@pytest.mark.parametrize(
    "a",
    [
        [[-172.1, -42.1], [4e6, -4e6]],
        [[0.0, 1.0], [-1.0, 0.0]],
        [[-1.0, 0.0], [0.0, -1e9]],
        [[2.0, 1.0], [0.0, 2.0]],
    ],
)
def test_eig2_matches_numpy(a):
    ours = sorted(eig2(np.array(a)), key=lambda z: (z.real, z.imag))
    ref = sorted(np.linalg.eigvals(np.array(a)), key=lambda z: (z.real, z.imag))
    np.testing.assert_allclose(ours, ref, rtol=1e-9, atol=1e-12)


def test_eig2_resolves_stiff_slow_pole():
    a = np.array([[-172.10526315789474, -42.10526315789474], [4e6, -4e6]])
    slow = eig2(a)[-1]
    # product of eigenvalues is det(A); the slow pole follows without cancellation
    assert slow.real * eig2(a)[0].real == pytest.approx(np.linalg.det(a), rel=1e-12)


def test_operating_point_as_dict():
    op = OperatingPoint(0.5, 800.0, 450.0, 1.0, 451.0, 1.0)
    assert list(op.as_dict()) == ["duty", "v_d", "v_ob", "i_l", "v_c", "i_b"]
