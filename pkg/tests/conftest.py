from decimal import Decimal
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
CONFIG_ORDER = ("rel14-sf", "rel15-sf-n3", "rel15-slot", "rel15-subslot")


def load_latency_golden():
    """{(scheme, direction, k, config): (Decimal value, class char)}"""
    out = {}
    for line in (DATA / "latency_golden.txt").read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, cells = line.split("|")
        scheme, direction, k = key.split()
        for config, cell in zip(CONFIG_ORDER, cells.split()):
            out[(scheme, direction, int(k), config)] = (Decimal(cell[1:]), cell[0])
    return out


@pytest.fixture(scope="session")
def latency_golden():
    return load_latency_golden()


ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criteria (long running)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
