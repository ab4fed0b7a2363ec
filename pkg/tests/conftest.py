_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    n, name = props["criterion"]
    prev = _criteria.get(n)
    ok = report.outcome == "passed" and (prev is None or prev[1])
    detail = "; ".join(x for x in ((prev or (0, 0, ""))[2], props.get("detail", "")) if x)
    _criteria[n] = (name, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        name, ok, detail = _criteria[n]
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
