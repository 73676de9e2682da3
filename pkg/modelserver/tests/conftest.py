from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from toydata import BUGGY_VOCAB, CLEAN_VOCAB, CONTEXT_VOCAB, make_toy_pairs  # noqa: E402,F401

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
        _ACCEPTANCE_RESULTS[marker.args[0]] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{_ACCEPTANCE_RESULTS[name]}] {name}")


@pytest.fixture(scope="session")
def toy_pairs_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("toy") / "pairs.jsonl"
    with path.open("w", encoding="utf-8") as handle:
        for row in make_toy_pairs():
            handle.write(json.dumps(row) + "\n")
    return path


@pytest.fixture(scope="session")
def toy_reports_file(tmp_path_factory) -> Path:
    rng = random.Random(11)
    path = tmp_path_factory.mktemp("toy") / "reports.jsonl"
    with path.open("w", encoding="utf-8") as handle:
        for i in range(120):
            words = rng.choices(CONTEXT_VOCAB + BUGGY_VOCAB + CLEAN_VOCAB, k=rng.randint(15, 40))
            handle.write(
                json.dumps(
                    {
                        "id": f"R-{i}",
                        "project": "toy",
                        "version": "1.0",
                        "title": " ".join(words[:5]),
                        "description": " ".join(words[5:]),
                        "created_at": "2021-01-01T00:00:00Z",
                    }
                )
                + "\n"
            )
    return path
