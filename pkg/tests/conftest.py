def pytest_terminal_summary(terminalreporter):
    from tests.test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number].line())
