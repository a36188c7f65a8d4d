import os

import pytest
from hypothesis import HealthCheck, settings

from mirrornoise.io import bundled_config
from mirrornoise.params import fig2_params
from mirrornoise.steady_state import solve_resonant

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def fig2():
    return fig2_params()


@pytest.fixture
def fig2_op(fig2):
    return solve_resonant(fig2)


@pytest.fixture(scope="session")
def sim_params():
    return bundled_config("sim.cfg").params


@pytest.fixture(scope="session")
def sim_op(sim_params):
    return solve_resonant(sim_params)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
