import sys


def pytest_terminal_summary(terminalreporter):
    """Repeat the per-criterion lines logged by the acceptance module at the end of the run."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", {}) if mod else {}
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
