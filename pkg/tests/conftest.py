import pytest

_ACCEPTANCE: list[tuple[str, str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record one acceptance check and assert it.

    Every recorded line is echoed in the terminal summary so the acceptance
    report is visible without ``-s``.
    """

    def check(criterion: str, label: str, passed: bool, detail: str = "") -> None:
        _ACCEPTANCE.append((criterion, label, bool(passed), detail))
        assert passed, f"criterion {criterion} [{label}] failed: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, label, passed, detail in _ACCEPTANCE:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {criterion}: {label}  {detail}")
    terminalreporter.section("acceptance summary")
    verdicts: dict[str, bool] = {}
    for criterion, _, passed, _ in _ACCEPTANCE:
        verdicts[criterion] = verdicts.get(criterion, True) and passed
    for criterion in sorted(verdicts, key=int):
        checks = [p for c, _, p, _ in _ACCEPTANCE if c == criterion]
        status = "PASS" if verdicts[criterion] else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {criterion}  ({sum(checks)}/{len(checks)} checks)")
