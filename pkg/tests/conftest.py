from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from paraflow.grid import make_grid
from paraflow.model import PotentialSpec, Well, build_switch_model
from paraflow.operator import assemble_laplacian

# depth of the gaussian slope well giving one negative eigenvalue at zero
# (certified non-resonant on every grid used below)
BISTABLE_DEPTH = 3.0


@pytest.fixture(scope="session")
def grid():
    return make_grid(10.0, 199)


@pytest.fixture(scope="session")
def laplacian(grid):
    return assemble_laplacian(grid)


@pytest.fixture(scope="session")
def stable_model():
    """alpha = gamma = -1: the flow is F(x, u) = -u, zero is the global sink."""
    return build_switch_model(PotentialSpec(1.0), PotentialSpec(1.0), s0=1.0)


@pytest.fixture(scope="session")
def bistable_model():
    """m = 0 at infinity, m' = 1 at zero: saddle at the origin, stable pair."""
    return build_switch_model(
        PotentialSpec(1.0),
        PotentialSpec(1.0, Well("gaussian", BISTABLE_DEPTH, 1.0)),
        s0=1.0,
    )
