"""Shared reporting for the acceptance suite.

Each acceptance test registers exactly one PASS/FAIL line; the lines are
echoed in the terminal summary so the verdicts survive output capture.
"""

_ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    verdict = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"{verdict} {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
