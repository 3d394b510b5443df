import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from escrowlab.ledger import Ledger, OrderingPolicy  # noqa: E402

SAMPLED_X = (1, 10, 100)


@pytest.fixture
def ledger():
    led = Ledger(OrderingPolicy.bob_first(), seed=7)
    led.create_account(1000, "alice")
    led.create_account(1000, "bob")
    return led


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
