import re

CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = CRITERION.search(getattr(rep, "nodeid", ""))
            if not m or (outcome == "passed" and rep.when != "call"):
                continue
            n = int(m[1])
            results[n] = results.get(n, True) and outcome == "passed"
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if results[n] else 'FAIL'}")
