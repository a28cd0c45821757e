from pathlib import Path

import pytest

from graphpoincare.graphs import cycle, homogeneous_tree, line
from graphpoincare.measures import counting

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def binary_tree():
    """Ball of radius 4 in the tree where every vertex has degree 3."""
    return homogeneous_tree(2, 4)


@pytest.fixture
def short_line():
    return line(6)


@pytest.fixture
def ring():
    return cycle(12)


@pytest.fixture
def unit():
    return counting()
