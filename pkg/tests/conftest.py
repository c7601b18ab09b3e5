import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from domain_grid import Grid  # noqa: E402
from sobolev_norms import make_cutoffs  # noqa: E402


@pytest.fixture
def small_grid():
    return Grid(8, 8, 9)


@pytest.fixture
def grid16():
    return Grid(16, 16, 17)


@pytest.fixture
def cutoffs(small_grid):
    return make_cutoffs(small_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
