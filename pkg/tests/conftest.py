import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def within_sigma(count, trials, p, k):
    """|count - trials p| <= k binomial standard deviations."""
    sigma = np.sqrt(trials * p * (1 - p))
    return abs(count - trials * p) <= k * sigma


@pytest.fixture
def sigma_check():
    return within_sigma


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
