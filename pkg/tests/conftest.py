_criteria = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _criteria[value[0]] = value


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        _, title, ok, detail, seconds = _criteria[number]
        terminalreporter.write_line(
            f"criterion {number} {'PASS' if ok else 'FAIL'}  {title}  [{seconds:.1f} s]  {detail}"
        )
