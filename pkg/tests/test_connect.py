from __future__ import annotations

import numpy as np
import pytest

from paraflow.grid import Field, make_field, norms
from paraflow.model import PotentialSpec, Well, build_switch_model
from paraflow.semiflow import dissipation_check, evolve
from paraflow.equilibria import find_equilibria, newton_solve
from paraflow.connect import EquilibriumCensus, classify_limit, heteroclinic_search


@pytest.fixture(scope="module")
def bistable_census(grid, laplacian, bistable_model):
    return EquilibriumCensus(find_equilibria(bistable_model, laplacian, n_random=4, seed=0))


def test_census_dedup_and_ids(grid, laplacian, bistable_model, bistable_census):
    census = bistable_census
    n = len(census)
    assert n >= 3
    # re-adding an existing equilibrium returns its id without growth
    eq0 = census[0]
    assert census.add(eq0) == 0
    assert len(census) == n


def test_classify_constant_trajectory(grid, laplacian, bistable_model, bistable_census):
    eq = next(e for e in bistable_census.items if not e.trivial)
    rec = evolve(eq.u_star, bistable_model, laplacian, 1.0, 1e-2)
    tid = classify_limit(rec, bistable_census, laplacian)
    assert tid == bistable_census.items.index(eq)


def test_classify_linear_sink(grid, laplacian, stable_model):
    census = EquilibriumCensus(find_equilibria(stable_model, laplacian, n_random=2, seed=1))
    rng = np.random.default_rng(2)
    u0 = make_field(grid, 0.5 * rng.standard_normal(grid.n_interior))
    rec = evolve(u0, stable_model, laplacian, 50.0, 1e-2)
    tid = classify_limit(rec, census, laplacian)
    assert tid is not None
    assert census[tid].trivial


def test_classify_nonconvergent_returns_none(grid, laplacian, bistable_model, bistable_census):
    rng = np.random.default_rng(3)
    u0 = make_field(grid, 0.5 * rng.standard_normal(grid.n_interior))
    rec = evolve(u0, bistable_model, laplacian, 0.05, 1e-2)  # far from settled
    assert rec.status != "converged_to_equilibrium"
    assert classify_limit(rec, bistable_census, laplacian) is None


def test_classify_discovers_new_equilibria(grid, laplacian, bistable_model):
    # start from a census that only knows the trivial equilibrium
    zero = newton_solve(make_field(grid, np.zeros(grid.n_interior)), bistable_model, laplacian)
    census = EquilibriumCensus([zero])
    eqs = find_equilibria(bistable_model, laplacian, n_random=0, seed=0)
    nontrivial = next(e for e in eqs if not e.trivial)
    rec = evolve(nontrivial.u_star, bistable_model, laplacian, 1.0, 1e-2)
    tid = classify_limit(rec, census, laplacian)
    assert tid is not None and tid > 0
    assert len(census) == 2
    assert not census[tid].trivial


def test_heteroclinic_bistable_pair(grid, laplacian, bistable_model, bistable_census):
    result = heteroclinic_search(
        bistable_model, laplacian, bistable_census, eps_seed=1e-2, T_max=200.0, dt=5e-3
    )
    assert not result.fail
    assert len(result.records) == 2
    drops = sorted(r.energy_drop for r in result.records)
    assert drops[0] == pytest.approx(drops[1], abs=1e-8)
    assert all(d > 0 for d in drops)
    for rec in result.records:
        assert rec.source.trivial
        assert not rec.target.trivial
        assert rec.closeness <= 1e-6 * (1 + rec.target.h1_norm)
        # energy never increases along the discrete connection
        tol_energy = 1e-8 * (1 + abs(rec.trajectory.energy[0]))
        assert dissipation_check(rec.trajectory) <= tol_energy
    # odd model: opposite seeds land on mirror targets
    plus = next(r for r in result.records if r.seed_sign > 0)
    minus = next(r for r in result.records if r.seed_sign < 0)
    mirror = norms(Field(plus.target.u_star.values + minus.target.u_star.values, grid))[1]
    assert mirror <= 1e-6 * (1 + plus.target.h1_norm)


def test_heteroclinic_seed_halving_same_target(grid, laplacian, bistable_model, bistable_census):
    r1 = heteroclinic_search(
        bistable_model, laplacian, bistable_census, eps_seed=1e-2, T_max=200.0, dt=5e-3
    )
    r2 = heteroclinic_search(
        bistable_model, laplacian, bistable_census, eps_seed=5e-3, T_max=200.0, dt=5e-3
    )
    ids1 = sorted((r.seed_sign, r.target_id) for r in r1.records)
    ids2 = sorted((r.seed_sign, r.target_id) for r in r2.records)
    assert ids1 == ids2


def test_heteroclinic_fail_verdict_when_unresolved(grid, laplacian, bistable_model, bistable_census):
    # a horizon too short for any trajectory to settle leaves the predicted
    # connection unresolved: that is a FAIL verdict, not an error
    result = heteroclinic_search(
        bistable_model, laplacian, bistable_census, eps_seed=1e-2, T_max=0.5, dt=5e-3
    )
    assert result.fail
    assert not result.records
    assert result.nonconvergent == 2


def test_heteroclinic_requires_unstable_direction(grid, laplacian, stable_model):
    census = EquilibriumCensus(find_equilibria(stable_model, laplacian, n_random=2, seed=4))
    with pytest.raises(ValueError, match="no unstable direction"):
        heteroclinic_search(stable_model, laplacian, census)


def test_heteroclinic_requires_index_mismatch(grid, laplacian):
    # identical wells at zero and infinity: m = m' = 1, nothing is predicted
    well = Well("gaussian", 3.0, 1.0)
    m = build_switch_model(PotentialSpec(1.0, well), PotentialSpec(1.0, well), s0=1.0)
    census = EquilibriumCensus([])
    with pytest.raises(ValueError, match="indices coincide"):
        heteroclinic_search(m, laplacian, census)
