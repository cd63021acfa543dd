import os
import time
from contextlib import contextmanager

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_VERDICTS = {}


@pytest.fixture
def criterion():
    """``with criterion(n, title) as info:`` records PASS/FAIL for acceptance criterion n.

    Put human-readable numbers in ``info`` (a dict); they are printed after the verdict.
    """
    @contextmanager
    def rec(n, title):
        info = {}
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield info
            status = "PASS"
        finally:
            detail = ", ".join(f"{k}={v}" for k, v in info.items())
            line = f"CRITERION {n} {status}: {title} [{time.perf_counter() - start:.1f} s] {detail}".rstrip()
            _VERDICTS[n] = line
            print(line)
    return rec


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[n])
