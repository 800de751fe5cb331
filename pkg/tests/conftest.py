import numpy as np
import pytest

from FlowEngine.field import random_field
from FlowEngine.grid import make_grid
from SymbolCode.catalog import named_symbol

SEED = 20240601


@pytest.fixture
def grid():
    """The default grid: n=1, J=8, h=1/32."""
    return make_grid(n=1, J=8, inv_h=32)


@pytest.fixture
def small_grid():
    return make_grid(n=1, J=4, inv_h=8)


@pytest.fixture
def heat():
    return named_symbol("heat")


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def fields(grid, rng):
    return [random_field(grid, rng) for _ in range(10)]
