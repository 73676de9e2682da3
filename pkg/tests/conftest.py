from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from backends import MappingEmbedding  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion, reported pass/fail at exit"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        name = marker.args[0]
        _ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{_ACCEPTANCE_RESULTS[name]}] {name}")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def mapping_backend_2d() -> MappingEmbedding:
    """The 2-D worked example: doc B=(0.707, 0.707) and three tokens embedded
    at (1,0), (0,1), (0.6,0.8). Token names keep the same lexicographic order
    as the original single letters but dodge the stop-word list."""
    return MappingEmbedding(
        {"ka": [1.0, 0.0], "kb": [0.0, 1.0], "kc": [0.6, 0.8]},
        doc_vector=[0.707, 0.707],
    )
