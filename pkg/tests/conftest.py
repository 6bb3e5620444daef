from importlib import resources

import pytest

from optauction import io

DATA = resources.files("optauction").joinpath("data")


def data_path(name: str) -> str:
    return str(DATA.joinpath(name))


@pytest.fixture(scope="session")
def one_item():
    scenario = io.load_scenario(data_path("one_item_scenario.json"))
    return scenario, io.load_bids(data_path("one_item_bids.json"), scenario)


@pytest.fixture(scope="session")
def four_item():
    scenario = io.load_scenario(data_path("four_item_scenario.json"))
    return scenario, io.load_bids(data_path("four_item_bids.json"), scenario)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
