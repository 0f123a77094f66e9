import os

import pytest

ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def fixtures_dir():
    from refgame.protocols import fixture_dir
    return fixture_dir()


@pytest.fixture(autouse=True)
def _no_fixture_override(monkeypatch):
    if "REFGAME_FIXTURES" in os.environ:
        monkeypatch.delenv("REFGAME_FIXTURES")
