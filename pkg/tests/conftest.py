"""Shared fixtures and hypothesis profiles."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    """Directory holding optional real-world logs (``PRIVPART_FIXTURES`` overrides)."""
    return Path(os.environ.get("PRIVPART_FIXTURES", Path(__file__).parent / "fixtures"))


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture()
def record_criterion(request):
    """Record ``(number, passed, detail)``; the summary hook prints one line per criterion."""

    def record(number: int, passed, detail: str) -> None:
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        line = f"criterion {number:>2}: {status}  {detail}"
        print(line)
        request.config.stash.setdefault(ACCEPTANCE, []).append((number, line))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
