import pytest

_CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def report():
    """Record one acceptance line; the test still asserts on its own."""

    def _record(key: str, passed: bool, detail: str) -> None:
        _CRITERIA[key] = (bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(k.rstrip("abcd")), k)):
        passed, detail = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
