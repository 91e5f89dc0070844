"""Shared fixtures for the graphpq test suite."""

import numpy as np
import pytest

from src.core.graph import path_graph, star_graph
from src.core.problem import preset_example51, preset_example52
from src.services.config_service import ConfigService


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def path9():
    return path_graph(9)


@pytest.fixture
def star3():
    return star_graph(3)


@pytest.fixture
def example51(path9):
    return preset_example51(path9, "v0", "v8")


@pytest.fixture
def example52(star3):
    return preset_example52(star3, "c", "l1")


@pytest.fixture
def config(tmp_path):
    """ConfigService backed by a file that does not exist (defaults only)."""
    return ConfigService(tmp_path / "config.json")
