from __future__ import annotations

import csv
from decimal import Decimal
from pathlib import Path

import pytest

from ippg.harness.synthetic import make_dataset
from ippg.packager import BoxBackend

DATA = Path(__file__).parent / "data"


@pytest.fixture
def box() -> BoxBackend:
    return BoxBackend()


@pytest.fixture(scope="session")
def published_tables() -> list[dict]:
    with (DATA / "published_tables.csv").open() as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="session")
def synthetic_dataset(tmp_path_factory) -> Path:
    return make_dataset(tmp_path_factory.mktemp("synthetic"), n=6, seed=11)


def usd(text: str) -> Decimal:
    return Decimal(text)


_ACCEPTANCE: list[tuple[str, str, float]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.module.__name__.endswith("test_acceptance"):
        label = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE.append((label, report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, seconds in _ACCEPTANCE:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}  ({seconds:.2f}s)")
