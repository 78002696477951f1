import contextlib
import time

import pytest

_ACCEPTANCE = []


class _Recorder:
    @contextlib.contextmanager
    def __call__(self, number, title):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            elapsed = time.perf_counter() - start
            first = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
            _ACCEPTANCE.append(f"[FAIL] criterion {number}: {title} ({elapsed:.2f}s) -- {first}")
            raise
        elapsed = time.perf_counter() - start
        _ACCEPTANCE.append(f"[PASS] criterion {number}: {title} ({elapsed:.2f}s)")


@pytest.fixture
def criterion():
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
