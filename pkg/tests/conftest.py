import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

#: (criterion number, passed, detail) recorded by test_acceptance
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, passed, detail in sorted(ACCEPTANCE_LINES, key=lambda r: r[0]):
        terminalreporter.write_line(
            f"criterion {num}: {'PASS' if passed else 'FAIL'}  {detail}")
