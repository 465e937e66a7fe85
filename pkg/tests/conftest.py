import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("capflow", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("capflow")

THETAS = (math.pi / 6, math.pi / 3, math.pi / 2)


@pytest.fixture(params=THETAS, ids=("pi6", "pi3", "pi2"))
def theta(request):
    return request.param


CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    CRITERIA[number] = (bool(passed), detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
