import pytest

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion():
    """``criterion(n, title, passed, detail)`` records and prints one result line."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> bool:
        _CRITERIA[number] = (title, bool(passed), detail)
        print(_line(number))
        return passed

    return record


def _line(number: int) -> str:
    title, passed, detail = _CRITERIA[number]
    return f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} | {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_line(number))
    passed = sum(p for _, p, _ in _CRITERIA.values())
    terminalreporter.write_line(f"{passed}/{len(_CRITERIA)} criteria pass")
