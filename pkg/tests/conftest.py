import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def verdict_line():
    """Record the one-line outcome of an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str, seconds: float):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d} {status}  {title}: {detail} [{seconds:.2f} s]"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
