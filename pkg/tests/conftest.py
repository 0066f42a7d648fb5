import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# filled by test_acceptance.py, reported once at the end of the run
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def spec():
    from tdtunnel.params import BarrierSpec
    return BarrierSpec()


@pytest.fixture(scope="session")
def modes60(spec):
    from tdtunnel.dynamics import ModeSet
    return ModeSet.build(spec, 60)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
