from fractions import Fraction

import pytest

from ptgame import BUNDLED_MODELS, bundled_model, parse_model, solve

ACCEPTANCE_LINES: list = []

# Parameter points inside each model's winning set used by the simulations.
WINNING_POINTS = {
    "fig1": [{}],
    "fig3": [{"p": Fraction(0)}, {"p": Fraction(1, 2)}, {"p": Fraction(1)}, {"p": Fraction(2)}],
    "fig4a": [{"p": Fraction(1, 2)}, {"p": Fraction(1)}, {"p": Fraction(2)}],
    "fig4b": [],
    "prodcell": [{"p": Fraction(3, 2)}, {"p": Fraction(3)}],
}


@pytest.fixture(scope="session")
def texts():
    return {name: bundled_model(name) for name in BUNDLED_MODELS}


@pytest.fixture(scope="session")
def models(texts):
    return {name: parse_model(text) for name, text in texts.items()}


@pytest.fixture(scope="session")
def solved(models):
    return {name: solve(g, check=True) for name, g in models.items()}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
