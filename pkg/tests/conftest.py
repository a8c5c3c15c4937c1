import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vmfkit.ode import SolverConfig, solve_profile  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def profile_factory():
    """Session-wide cache of solved profiles keyed by (D, radius, eps)."""
    cache = {}

    def get(D, radius=0.99, eps=None):
        key = (D, radius, eps)
        if key not in cache:
            cache[key] = solve_profile(D, SolverConfig(checkpoints=(radius,), initial_slope_eps=eps))
        return cache[key]

    return get


@pytest.fixture(autouse=True)
def _isolated_profile_cache(monkeypatch):
    monkeypatch.delenv("VMFKIT_CACHE_DIR", raising=False)
    yield


_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance_record():
    """Store one summary line per acceptance criterion."""

    def record(i, ok, line):
        _ACCEPTANCE[i] = line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[i])
