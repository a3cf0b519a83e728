from pathlib import Path

import numpy as np
import pytest

from npdif.data import GroupedScores, ResponseMatrix, split_groups, standardized_total_score
from npdif.simulation import dif_scenario, generate_responses

DATA_DIR = Path(__file__).parent / "data"
VERBAL_CSV = DATA_DIR / "verbal_aggression.csv"


@pytest.fixture
def verbal_csv():
    if not VERBAL_CSV.exists():
        pytest.skip("verbal-aggression CSV not supplied")
    return VERBAL_CSV


@pytest.fixture
def small_matrix():
    """200 respondents, 20 items, shift DIF on item 0."""
    return generate_responses(dif_scenario("b", n=200), np.random.default_rng(11))


@pytest.fixture
def null_matrix():
    return generate_responses(dif_scenario("none", n=160), np.random.default_rng(5))


@pytest.fixture
def small_groups(small_matrix):
    return split_groups(small_matrix, standardized_total_score(small_matrix))


@pytest.fixture
def toy_groups():
    return GroupedScores(np.array([-1.1, 0.2, 0.9]), np.array([-0.4, 0.5]))


@pytest.fixture
def tiny_matrix():
    y = np.array([[1, 0, 1], [0, 0, 1], [1, 1, 1], [0, 1, 0], [1, 1, 0], [0, 0, 0]])
    return ResponseMatrix(y, ("i1", "i2", "i3"), np.array([0, 0, 0, 1, 1, 1]))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
