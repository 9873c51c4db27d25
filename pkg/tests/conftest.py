import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def report(request):
    """``report(ok, label, detail)`` prints one PASS/FAIL line and keeps it for the summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def emit(ok, label, detail):
        line = f"{'PASS' if ok else 'FAIL'} [{label}] {detail}"
        lines.append(line)
        print(line)
        return ok

    return emit


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
