"""Shared fixtures: the bundled running-example query and the example queries built on it."""

from __future__ import annotations

import pytest

from yplus.cli import parse_tree_arg
from yplus.query import make_query
from yplus.queryfile import bundled_path, parse_query_file

Q1_ATOMS = [
    ("R1", ("x1", "x2", "x3", "x4"), "v"),
    ("R2", ("x2", "x5"), "v"),
    ("R3", ("x3", "x4"), "v"),
    ("R4", ("x3", "x6"), "v"),
    ("R5", ("x4", "x7"), "v"),
    ("R6", ("x7", "x8"), "v"),
]
T1 = "R5 R1:R5 R2:R1 R3:R1 R4:R3 R6:R5"
T2 = "R1 R2:R1 R3:R1 R4:R1 R5:R1 R6:R5"
T3 = "R1 R2:R1 R3:R1 R4:R3 R5:R1 R6:R5"


def q_with_output(output, semiring=None):
    from yplus.semiring import SUM_PRODUCT

    return make_query(Q1_ATOMS, output, semiring or SUM_PRODUCT, name="Q")


@pytest.fixture
def q1file():
    return parse_query_file(bundled_path("q1.query"))


@pytest.fixture
def q1(q1file):
    return q1file.query


@pytest.fixture
def q1rels(q1file):
    return q1file.load()


@pytest.fixture
def tree_of(q1file):
    return lambda text: parse_tree_arg(text, q1file)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
