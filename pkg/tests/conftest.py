import numpy as np
import pytest

from aplus.fixtures import financial_fixture
from aplus.maintenance import Database


@pytest.fixture
def fin():
    return financial_fixture()


@pytest.fixture
def fin_owns():
    return financial_fixture(with_owns=True)


@pytest.fixture
def fin_db(fin):
    db = Database(fin)
    yield db
    db.close()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def names(graph, eids):
    return {graph.edge_name(e) for e in eids}


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    report = getattr(module, "REPORT", None)
    if report:
        terminalreporter.section("acceptance criteria")
        for number in sorted(report):
            terminalreporter.write_line(report[number])
