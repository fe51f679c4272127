import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

DATA = os.path.join(os.path.dirname(__file__), "data")

# filled by test_acceptance.report(); printed after the run
CRITERIA_LINES = {}


def data_path(name):
    return os.path.join(DATA, name)


def read_data(name):
    with open(data_path(name), encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def g1():
    from tycus.rdf import parse_graph
    return parse_graph(read_data("g1.nt"))


@pytest.fixture(scope="session")
def g1_conformant():
    from tycus.rdf import parse_graph
    return parse_graph(read_data("g1_conformant.nt"))


@pytest.fixture(scope="session")
def university_shapes():
    from tycus.shacl import parse_shapes
    return parse_shapes(read_data("university.shc"))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA_LINES):
        terminalreporter.write_line(CRITERIA_LINES[n])
