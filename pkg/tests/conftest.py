import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE: list[tuple[int, bool | None, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(k, ok, detail)``; ``ok=None`` marks a skip."""

    def record(k, ok, detail):
        ACCEPTANCE.append((k, ok, detail))
        print(f"{'SKIP' if ok is None else 'PASS' if ok else 'FAIL'} criterion {k}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        tag = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{tag} criterion {k}: {detail}")
