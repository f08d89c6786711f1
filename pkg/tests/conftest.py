from pathlib import Path

import pytest

from layoutlab.netlist import parse_netlist

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def ota_netlist_text() -> str:
    return (FIXTURES / "ota.ckt").read_text()


@pytest.fixture(scope="session")
def ota_netlist(ota_netlist_text):
    return parse_netlist(ota_netlist_text, name="ota")


@pytest.fixture(scope="session")
def ota_placement_text() -> str:
    return (FIXTURES / "ota_placement.txt").read_text()
