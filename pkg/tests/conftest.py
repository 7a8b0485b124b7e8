"""Shared pytest configuration.

Collects one-line verdicts from the acceptance tests and prints them as a
block at the end of the run, so the pass/fail state of every acceptance
criterion is visible even when pytest captures stdout.
"""
from __future__ import annotations

from hypothesis import HealthCheck, settings

# Property tests call numba-compiled kernels whose first invocation pays a
# compilation cost; wall-clock deadlines would flake on that.
settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
