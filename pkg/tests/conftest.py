import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")

_ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store one summary line per acceptance criterion."""
    def _rec(num, ok, detail):
        _ACCEPTANCE[num] = (ok, detail)
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
    return _rec


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[num]
        tr.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
