import os

import numpy as np
import pytest

from wigner_utils import FieldFunction, ModeGrid
from wigner_utils.mode_space import norm_sq

MODE_COUNTS = [1, 2, 4, 8]


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(params=MODE_COUNTS)
def uniform_grid(request) -> ModeGrid:
    return ModeGrid.uniform(request.param)


@pytest.fixture(params=MODE_COUNTS)
def random_grid(request) -> ModeGrid:
    return ModeGrid.random(request.param, np.random.default_rng(100 + request.param))


@pytest.fixture()
def single_mode_grid() -> ModeGrid:
    return ModeGrid.uniform(1)


@pytest.fixture()
def two_mode_grid() -> ModeGrid:
    return ModeGrid.from_weights([0.5, 1.7])


def get_random_field(grid: ModeGrid, rng: np.random.Generator, scale: float = 0.5) -> FieldFunction:
    balanced = scale * (rng.normal(size=grid.mode_count) + 1j * rng.normal(size=grid.mode_count))
    return FieldFunction.from_balanced(grid, balanced)


def get_random_spectrum(grid: ModeGrid, rng: np.random.Generator) -> FieldFunction:
    f = get_random_field(grid, rng, 1.0)
    return f / np.sqrt(norm_sq(f))


def get_scenario_path(name: str) -> str:
    path = os.path.join(os.path.dirname(__file__), "..", "wigner_utils", "scenarios", name)
    assert os.path.exists(path)
    return path
