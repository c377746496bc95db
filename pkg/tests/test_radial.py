"""Radial-mode runs of the full pipeline.

The radial Laplacian is handled through a similarity transform to symmetric
tridiagonal form, so every downstream capability (counting, Newton, time
integration, connections) must work unchanged; these tests exercise that on
3d radial grids, where a gaussian well needs depth ~8 before it binds.
"""

from __future__ import annotations

import numpy as np
import pytest

from paraflow.grid import make_field, make_grid, norms
from paraflow.model import PotentialSpec, Well, build_switch_model
from paraflow.operator import assemble_laplacian, assemble_schrodinger
from paraflow.semiflow import MonitorConfig, dissipation_check, evolve, tail_bound_check
from paraflow.spectrum import count_negative
from paraflow.equilibria import find_equilibria
from paraflow.connect import EquilibriumCensus, heteroclinic_search
from oracles import count_below, dense_from_tridiag

RADIAL_DEPTH = 8.0


@pytest.fixture(scope="module")
def rgrid():
    return make_grid(12.0, 299, "radial3")


@pytest.fixture(scope="module")
def rlap(rgrid):
    return assemble_laplacian(rgrid)


@pytest.fixture(scope="module")
def radial_bistable():
    return build_switch_model(
        PotentialSpec(1.0),
        PotentialSpec(1.0, Well("gaussian", RADIAL_DEPTH, 1.0)),
        s0=1.0,
    )


def test_radial_count_matches_dense_oracle(rgrid):
    V = make_field(rgrid, 1.0 - RADIAL_DEPTH * np.exp(-(rgrid.nodes**2)))
    T = assemble_schrodinger(rgrid, V)
    dense = np.linalg.eigvalsh(dense_from_tridiag(T.diag, T.offdiag))
    assert count_negative(T) == count_below(dense, 0.0) == 1


def test_radial_evolve_decay_and_dissipation(rgrid, rlap):
    m = build_switch_model(PotentialSpec(1.0), PotentialSpec(1.0), s0=1.0)
    u0 = make_field(rgrid, np.exp(-(rgrid.nodes**2)))
    rec = evolve(u0, m, rlap, 5.0, 1e-2, MonitorConfig(k_list=(6.0,)))
    assert np.all(np.diff(rec.l2) < 0)
    assert dissipation_check(rec) <= 0.0
    assert tail_bound_check(rec)[6.0] <= 0.0


def test_radial_semigroup_exact(rgrid, rlap, radial_bistable):
    rng = np.random.default_rng(0)
    u0 = make_field(rgrid, 0.2 * rng.standard_normal(rgrid.n_interior))
    dt = 2.0**-6
    whole = evolve(u0, radial_bistable, rlap, 0.5, dt)
    half = evolve(
        evolve(u0, radial_bistable, rlap, 0.25, dt).final, radial_bistable, rlap, 0.25, dt
    )
    assert np.array_equal(whole.final.values, half.final.values)


def test_radial_census_and_connections(rgrid, rlap, radial_bistable):
    eqs = find_equilibria(radial_bistable, rlap, n_random=4, seed=1)
    nontrivial = [e for e in eqs if not e.trivial]
    assert len(nontrivial) == 2  # odd pair survives in radial coordinates
    assert all(e.energy < 0 for e in nontrivial)
    result = heteroclinic_search(
        radial_bistable, rlap, EquilibriumCensus(eqs), eps_seed=1e-2, T_max=200.0, dt=5e-3
    )
    assert len(result.records) == 2
    for rec in result.records:
        assert rec.energy_drop > 0
        assert rec.closeness <= 1e-6 * (1 + rec.target.h1_norm)


def test_radial_norm_uses_measure(rgrid):
    u = make_field(rgrid, np.ones(rgrid.n_interior))
    l2, h1 = norms(u)
    # h * sum r^2 for the unit field
    assert l2 == pytest.approx(np.sqrt(rgrid.spacing * np.sum(rgrid.nodes**2)), rel=1e-13)
    assert h1 > l2
