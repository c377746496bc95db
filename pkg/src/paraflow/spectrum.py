"""Eigenvalue machinery on top of the exact inertia counts.

Everything below the essential-spectrum proxy is resolved by bisection on
Sturm counts, so each eigenvalue estimate carries a guaranteed bracket; the
negative-eigenvalue multiplicities that drive the index arguments are read
off inertia counts directly and never depend on eigensolver convergence.

The non-resonance report certifies a spectral gap at zero for the operator
-Lap + potential: its cutoff is nu_tilde / 2 (below which the spectrum is a
finite set of isolated eigenvalues), and the kernel gap is the smallest
eigenvalue magnitude found there, or the cutoff itself when nothing lies
below it.  A gap under the certification tolerance (default 10 h^2, the
discretization's own eigenvalue error scale) leaves the report uncertified,
which blocks the index experiments downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, norms
from .operator import (
    NearSingularError,
    TridiagOperator,
    apply,
    count_below_many,
    gershgorin_interval,
    inertia_below,
    op_norm_bound,
    solve_shifted,
)


@dataclass(frozen=True, eq=False)
class SpectralReport:
    count_negative: int
    eigenvalues_below_cutoff: np.ndarray
    kernel_gap: float
    cutoff: float
    tol: float
    certified: bool
    resolved_eigenvectors: list[Field] | None = None


def count_negative(T: TridiagOperator) -> int:
    return inertia_below(T, 0.0)[0]


def eigenvalues_below(T: TridiagOperator, cutoff: float, tol: float) -> np.ndarray:
    """All eigenvalues strictly below the cutoff, each within tol, by
    simultaneous bisection; the list length always equals the inertia count."""
    if not tol > 0:
        raise ValueError(f"bisection tolerance must be positive, got {tol}")
    k = inertia_below(T, cutoff)[0]
    if k == 0:
        return np.empty(0)
    glo = gershgorin_interval(T)[0] - tol
    lo = np.full(k, glo)
    hi = np.full(k, cutoff)
    ranks = np.arange(1, k + 1)  # count(x) >= j  iff  lambda_j < x
    for _ in range(240):
        if not np.any(hi - lo > tol):
            break
        mid = 0.5 * (lo + hi)
        counts = count_below_many(T, mid)
        above = counts >= ranks
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return np.sort(0.5 * (lo + hi))


def eigenvector(
    T: TridiagOperator, lam: float, tol: float = 1e-8, max_iter: int = 60
) -> Field:
    """Inverse iteration at the shift lam.

    Returns the physical eigenvector with unit (weighted) l2 norm and the
    first significantly nonzero component positive.  Residual target is
    tol * ||T||; raises on non-convergence.
    """
    scale = op_norm_bound(T)
    rng = np.random.default_rng(0x5EED)
    v = Field(rng.standard_normal(T.n), T.grid)
    v = Field(v.values / max(norms(v)[0], 1e-300), T.grid)
    shift = float(lam)
    for _ in range(max_iter):
        try:
            w = solve_shifted(T, shift, v)
        except NearSingularError:
            shift += 1e-12 * max(1.0, scale)
            continue
        l2w = norms(w)[0]
        if not np.isfinite(l2w) or l2w == 0.0:
            shift += 1e-12 * max(1.0, scale)
            continue
        v = Field(w.values / l2w, T.grid)
        Av = apply(T, v)
        g = T.grid
        ray = float(g.spacing * np.dot(g.weights * Av.values, v.values))
        resid = Av.values - ray * v.values
        rnorm = float(np.sqrt(g.spacing * np.dot(g.weights * resid, resid)))
        if rnorm <= tol * max(scale, 1.0):
            vals = v.values
            lead = np.flatnonzero(np.abs(vals) > 1e-12 * np.max(np.abs(vals)))
            if lead.size and vals[lead[0]] < 0:
                vals = -vals
            return Field(vals, T.grid)
    raise RuntimeError(f"inverse iteration did not converge at shift {lam}")


def nonresonance_report(
    T: TridiagOperator,
    nu_tilde: float,
    tol: float | None = None,
    want_vectors: bool = False,
) -> SpectralReport:
    """Spectral-gap certificate at zero with cutoff nu_tilde / 2."""
    if not nu_tilde > 0:
        raise ValueError(f"nu_tilde must be positive, got {nu_tilde}")
    if tol is None:
        tol = 10.0 * T.grid.spacing**2
    cutoff = 0.5 * nu_tilde
    eig_tol = min(1e-10 * max(1.0, op_norm_bound(T)), 1e-3 * tol)
    eigs = eigenvalues_below(T, cutoff, eig_tol)
    m = count_negative(T)
    kernel_gap = float(np.min(np.abs(eigs))) if eigs.size else cutoff
    vectors = None
    if want_vectors and eigs.size:
        vectors = [eigenvector(T, float(ev)) for ev in eigs]
    return SpectralReport(
        count_negative=m,
        eigenvalues_below_cutoff=eigs,
        kernel_gap=kernel_gap,
        cutoff=cutoff,
        tol=float(tol),
        certified=bool(kernel_gap >= tol),
        resolved_eigenvectors=vectors,
    )
