def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    report = getattr(module, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(report):
        terminalreporter.write_line(report[number])
