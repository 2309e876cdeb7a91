"""Shared fixtures: a coarse configuration for fast unit tests and the
full benchmark configuration for the acceptance suite."""

from __future__ import annotations

import numpy as np
import pytest

from rom2l import (
    BurgersProblem,
    ExperimentConfig,
    build_mesh,
    compute_pod,
    generate_snapshots,
    parameter_grid,
)
from rom2l.bench import build_basis


@pytest.fixture(scope="session")
def default_problem():
    return BurgersProblem()


@pytest.fixture(scope="session")
def coarse_mesh():
    return build_mesh(-4.0, 4.0, 0.25)


@pytest.fixture(scope="session")
def coarse_basis(default_problem, coarse_mesh):
    """Small basis (65 nodes, 17 snapshots) for fast unit tests."""
    q_values = parameter_grid(-4.0, 4.0, 0.5)
    snaps = generate_snapshots(default_problem, q_values, coarse_mesh)
    return compute_pod(snaps)


@pytest.fixture(scope="session")
def reference_config():
    """The full benchmark configuration (801 snapshots, 3201 nodes)."""
    return ExperimentConfig()


@pytest.fixture(scope="session")
def reference_basis(reference_config):
    return build_basis(reference_config)


@pytest.fixture()
def rng():
    return np.random.default_rng(20250819)
