# one summary line per acceptance criterion, printed after the run
CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, title, seconds, detail = CRITERIA[n]
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {n}: {title} ({seconds:.2f} s)"
        if detail:
            line += f" {detail}"
        terminalreporter.write_line(line)
