"""Heteroclinic search: trajectories out of the unstable directions at zero.

When the index at infinity differs from the index at zero and zero has
unstable directions, the gradient-like structure forces the trajectories
leaving zero along its unstable eigenvectors to terminate at equilibria
with strictly smaller energy.  The search evolves from +- eps times each
unstable eigenvector, classifies the limit against the equilibrium census
(Newton-polishing the terminal state, adding genuinely new equilibria), and
returns only records passing the connection invariants: positive energy
drop, terminal closeness within tolerance, energy series nonincreasing.

An empty record set under m != m' is a FAIL verdict: the configuration,
not the code, contradicts the predicted connection at this resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field
from .model import NonlinearityModel
from .operator import NearSingularError, TridiagOperator
from .semiflow import (
    MonitorConfig,
    STATUS_CONVERGED,
    TrajectoryRecord,
    dissipation_check,
    evolve,
)
from .equilibria import (
    DEDUP_TOL_FACTOR,
    Equilibrium,
    NewtonConvergenceError,
    _h1_distance,
    _jacobian,
    newton_solve,
)
from .spectrum import eigenvector, nonresonance_report

CONN_TOL_FACTOR = 1e-6


class EquilibriumCensus:
    """Id-stable equilibrium registry with h1-distance deduplication."""

    def __init__(self, items: list[Equilibrium] | None = None,
                 dedup_tol_factor: float = DEDUP_TOL_FACTOR):
        self.items: list[Equilibrium] = []
        self.dedup_tol_factor = dedup_tol_factor
        for eq in items or []:
            self.add(eq)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, eq_id: int) -> Equilibrium:
        return self.items[eq_id]

    def nearest(self, u: Field) -> tuple[int, float]:
        if not self.items:
            return -1, np.inf
        dists = [_h1_distance(eq.u_star, u) for eq in self.items]
        i = int(np.argmin(dists))
        return i, float(dists[i])

    def add(self, eq: Equilibrium) -> int:
        """Return the id of eq, merging into an existing entry within the
        dedup distance (keeping the smaller residual)."""
        i, dist = self.nearest(eq.u_star)
        if i >= 0 and dist <= self.dedup_tol_factor * (1.0 + eq.h1_norm):
            if eq.residual < self.items[i].residual:
                self.items[i] = eq
            return i
        self.items.append(eq)
        return len(self.items) - 1


@dataclass(eq=False)
class ConnectionRecord:
    source: Equilibrium
    target: Equilibrium
    source_id: int
    target_id: int
    seed_direction: Field
    seed_sign: int
    trajectory: TrajectoryRecord
    energy_drop: float
    closeness: float


@dataclass(eq=False)
class HeteroclinicResult:
    records: list[ConnectionRecord]
    census: EquilibriumCensus
    nonconvergent: int
    fail: bool  # m != m' yet no valid connection was found


def classify_limit(
    rec: TrajectoryRecord,
    census: EquilibriumCensus,
    A: TridiagOperator,
    conn_tol_factor: float = CONN_TOL_FACTOR,
) -> int | None:
    """Census id of the trajectory's limit, or None when nonconvergent.

    The terminal state is Newton-polished first; a polished point matching
    no census entry is added as a discovery.  Terminal states that never
    settled (status other than converged) stay unclassified rather than
    being forced onto the nearest equilibrium.
    """
    if rec.status != STATUS_CONVERGED:
        return None
    try:
        polished = newton_solve(rec.final, rec.model, A)
    except (NewtonConvergenceError, NearSingularError):
        return None
    i, dist = census.nearest(polished.u_star)
    if i >= 0 and dist <= conn_tol_factor * (1.0 + census[i].h1_norm):
        return i
    return census.add(polished)


def heteroclinic_search(
    m: NonlinearityModel,
    A: TridiagOperator,
    census: EquilibriumCensus,
    eps_seed: float = 1e-2,
    T_max: float = 500.0,
    dt: float = 1e-2,
    monitors: MonitorConfig | None = None,
    conn_tol_factor: float = CONN_TOL_FACTOR,
) -> HeteroclinicResult:
    """Evolve from +-eps_seed times each unstable eigenvector at zero.

    Preconditions: the linearization at zero is certified non-resonant with
    m' >= 1, and the indices at zero and infinity differ.  Each resolved
    trajectory becomes a ConnectionRecord only if it passes the invariants
    (nontrivial target, positive energy drop, closeness within tolerance,
    no energy increase beyond the dissipation slack).
    """
    g = A.grid
    nu_tilde = min(m.alpha.base_level, m.gamma.base_level)
    J0 = _jacobian(A, np.asarray(m.linear_slope(g.nodes)))
    rep_zero = nonresonance_report(J0, nu_tilde)
    if not rep_zero.certified:
        raise ValueError(
            f"linearization at zero is uncertified (gap {rep_zero.kernel_gap:.3e}); "
            "zero must be hyperbolic before seeding"
        )
    m_zero = rep_zero.count_negative
    if m_zero == 0:
        raise ValueError("no unstable direction at zero (m' = 0); nothing to seed")
    rep_inf = nonresonance_report(
        _jacobian(A, np.asarray(m.alpha.slope(g.nodes))), m.alpha.base_level
    )
    m_inf = rep_inf.count_negative
    if m_inf == m_zero:
        raise ValueError(
            f"indices coincide (m = m' = {m_zero}); no connection is predicted"
        )

    if monitors is None:
        monitors = MonitorConfig(eps_conv=1e-10, conv_streak=10, state_stride=100)
    unstable = [ev for ev in rep_zero.eigenvalues_below_cutoff if ev < 0]

    try:
        source_id = next(i for i, eq in enumerate(census.items) if eq.trivial)
    except StopIteration:
        source_id = census.add(newton_solve(Field(np.zeros(g.n_interior), g), m, A))
    source = census[source_id]

    records = []
    nonconvergent = 0
    for ev in unstable:
        direction = eigenvector(J0, float(ev))
        for sign in (+1, -1):
            u0 = Field(sign * eps_seed * direction.values, g)
            rec = evolve(u0, m, A, T_max, dt, monitors)
            target_id = classify_limit(rec, census, A, conn_tol_factor)
            if target_id is None:
                nonconvergent += 1
                continue
            if target_id == source_id or census[target_id].trivial:
                continue
            target = census[target_id]
            closeness = _h1_distance(rec.final, target.u_star)
            energy_drop = source.energy - target.energy
            tol_energy = 1e-8 * (1.0 + abs(rec.energy[0]))
            invariants_ok = (
                energy_drop > 0
                and closeness <= conn_tol_factor * (1.0 + target.h1_norm)
                and dissipation_check(rec) <= tol_energy
            )
            if not invariants_ok:
                continue
            records.append(
                ConnectionRecord(
                    source=source,
                    target=target,
                    source_id=source_id,
                    target_id=target_id,
                    seed_direction=direction,
                    seed_sign=sign,
                    trajectory=rec,
                    energy_drop=energy_drop,
                    closeness=closeness,
                )
            )
    return HeteroclinicResult(
        records=records,
        census=census,
        nonconvergent=nonconvergent,
        fail=bool(m_inf != m_zero and not records),
    )
