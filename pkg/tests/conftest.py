"""Shared pytest plumbing: collects the acceptance-criterion result lines
so they are echoed in the terminal summary even though pytest captures
stdout during the tests themselves."""

acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
