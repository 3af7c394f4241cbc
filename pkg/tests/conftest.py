from __future__ import annotations

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}
N_CRITERIA = 10


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    ran = [n for n in range(1, N_CRITERIA + 1) if n in ACCEPTANCE_RESULTS]
    if not ran and not any("test_acceptance" in str(a) for a in config.args):
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in ACCEPTANCE_RESULTS:
            ok, detail = ACCEPTANCE_RESULTS[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} | {detail}")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: NOT RUN")
