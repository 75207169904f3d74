import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance verdicts ------------------------------------------------------
# Each acceptance test records one line here before asserting, so the verdict
# is printed even when the assertion fails.
_VERDICTS: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def verdict():
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        _VERDICTS[number] = (bool(passed), title, detail)
        print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title}: {detail}")
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        ok, title, detail = _VERDICTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
