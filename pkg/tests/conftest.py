import sys


def pytest_terminal_summary(terminalreporter):
    # per-criterion lines of the acceptance run, if it ran in this session
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
