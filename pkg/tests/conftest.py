from __future__ import annotations

import pytest

from hyperfutaki.manifest import load_manifest


@pytest.fixture(scope="session")
def cubic():
    return load_manifest("cubic")


@pytest.fixture(scope="session")
def quadric():
    return load_manifest("quadric")


@pytest.fixture(scope="session")
def hyperplane():
    return load_manifest("hyperplane")


@pytest.fixture(scope="session")
def example22():
    return load_manifest("example22")


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
