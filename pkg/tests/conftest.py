import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from charger2l.analysis import control_to_battery_tf  # noqa: E402
from charger2l.control import ModulatorConfig, design_pi  # noqa: E402
from charger2l.model import linearize, reference_params, steady_state  # noqa: E402
from charger2l.sim import reference_scenario, run  # noqa: E402


@pytest.fixture(scope="session")
def params():
    return reference_params()


@pytest.fixture(scope="session")
def plant(params):
    return control_to_battery_tf(linearize(params, steady_state(params, 0.9, 800.0, 450.0)))


@pytest.fixture(scope="session")
def gains(params, plant):
    return design_pi(plant, params.f_s)


@pytest.fixture(scope="session")
def modulator(params):
    return ModulatorConfig(v_m=params.v_m, t_s=params.t_s)


@pytest.fixture(scope="session")
def switched_trace(params, gains, modulator):
    return run(params, gains, modulator, reference_scenario("switched"))


@pytest.fixture(scope="session")
def averaged_trace(params, gains, modulator):
    return run(params, gains, modulator, reference_scenario("averaged"))


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
