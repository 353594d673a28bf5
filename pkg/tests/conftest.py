import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

EVIDENCE = {}


@pytest.fixture(scope="session")
def evidence():
    """Criterion number -> list of human-readable evidence strings."""
    return EVIDENCE


_CRITERION = re.compile(r"test_acceptance\.py::(?:\w+::)?test_c(\d+)_")


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if not m or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            n = int(m.group(1))
            ok = key == "passed"
            outcomes[n] = outcomes.get(n, True) and ok
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcomes):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if outcomes[n] else 'FAIL'}")
        for line in EVIDENCE.get(n, []):
            terminalreporter.write_line(f"    {line}")
