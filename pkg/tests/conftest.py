"""Shared pytest hooks.

The acceptance tests record one verdict line per criterion; echo them in
the terminal summary so they are visible without -s.
"""

VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
