from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from worktrace.decomposition import Decomposition, load_decomposition

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def study_decomposition() -> Decomposition:
    return load_decomposition((FIXTURES / "study" / "decomposition.json").read_bytes())


@pytest.fixture
def toy_workdir(tmp_path: Path) -> Path:
    """Fresh copy of the toy study bundle; returns its config path."""
    shutil.copytree(FIXTURES / "toy", tmp_path / "toy")
    return tmp_path / "toy" / "config.json"


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per release criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") != "call" and outcome != "error":
                continue
            lines.append((nodeid.split("::")[-1], outcome == "passed"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, ok in lines:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
