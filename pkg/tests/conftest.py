import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hybridnav import scenario as sc

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def fig8_60():
    return sc.synthesize(sc.make_profile("figure_eight", 60.0))


@pytest.fixture(scope="session")
def straight_60():
    return sc.synthesize(sc.make_profile("straight", 60.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record ``(id, passed, detail)`` for the acceptance summary."""
    def record(key, passed, detail):
        ACCEPTANCE[key] = (bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if passed else 'FAIL'}: {detail}")
