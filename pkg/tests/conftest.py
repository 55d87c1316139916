from fractions import Fraction

import pytest

from familycake.core import Agent, Allocation, Instance, Piece, StepMeasure

F = Fraction

EX1_ROWS = {
    "Alice": (6, 3, 0, 0),
    "Bob": (5, 4, 0, 0),
    "Charlie": (1, 8, 0, 0),
    "David": (0, 0, 6, 3),
    "Eva": (0, 0, 6, 3),
    "Frankie": (0, 0, 0, 9),
}


def make_ex1() -> Instance:
    agents = {name: Agent(name, StepMeasure((0, 1, 2, 3, 4), dens)) for name, dens in EX1_ROWS.items()}
    return Instance.build((0, 4), [[agents[n] for n in ("Alice", "Bob", "Charlie")],
                                   [agents[n] for n in ("David", "Eva", "Frankie")]])


def split(cut, cake=(0, 4)) -> Allocation:
    """Left piece [cake.left, cut] to family 1, the rest to family 2."""
    return Allocation((Piece.of((cake[0], cut)), Piece.of((cut, cake[1]))))


@pytest.fixture
def ex1():
    return make_ex1()


# ---------------------------------------------------------------------------
# one pass/fail line per acceptance criterion in the terminal summary

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        if report.when == "call" or name not in _ACCEPTANCE:
            _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n.split("_")[2]) if n.split("_")[2].isdigit() else 99):
        outcome = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
