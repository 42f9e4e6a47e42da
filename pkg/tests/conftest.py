import re

CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.failed or report.skipped:
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        if key not in CRITERIA or outcome != "PASS":
            CRITERIA[key] = (outcome, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), (outcome, secs) in sorted(CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num} {name.replace('_', ' ')}: {outcome} ({secs:.1f} s)")
