"""Shared pytest wiring.

The acceptance tests record one verdict line per criterion; echoing them in
the terminal summary keeps the verdicts visible even for passing tests, which
pytest would otherwise swallow with captured stdout.
"""

ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)
