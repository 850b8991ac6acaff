import re

import pytest

# filled by test_acceptance.record(); printed after the run
ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion check")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<3} {'PASS' if ok else 'FAIL'}  {detail}")
