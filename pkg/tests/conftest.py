import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_VERDICTS: dict[int, tuple[bool, str]] = {}
_RAN_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; the summary prints one line per criterion."""
    _RAN_ACCEPTANCE.append(request.node.nodeid)

    def record(number: int, ok: bool, detail: str) -> None:
        _VERDICTS[number] = (ok, detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RAN_ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 9):
        if n not in _VERDICTS:
            terminalreporter.write_line(f"criterion {n}: NOT RUN")
            continue
        ok, detail = _VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
