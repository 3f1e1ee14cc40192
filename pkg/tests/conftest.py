from pathlib import Path

import pytest

from forecast_cf.config import load_config
from forecast_cf.pipeline import prepare_in_memory, train_in_memory

ROOT = Path(__file__).resolve().parents[1]
FIXTURE_INI = ROOT / "configs" / "fixture.ini"
DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def fixture_config():
    return load_config(FIXTURE_INI)


@pytest.fixture(scope="session")
def fixture_data(fixture_config):
    return prepare_in_memory(fixture_config)


@pytest.fixture(scope="session")
def fixture_model(fixture_config, fixture_data):
    model, history = train_in_memory(fixture_config, fixture_data)
    return model


# one (label, status, detail) entry per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"{status} {label}: {detail}")
