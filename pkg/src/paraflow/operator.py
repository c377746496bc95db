"""Symmetric tridiagonal operators: assembly, inertia counts, shifted solves.

assemble_laplacian builds the Dirichlet 3-point Laplacian.  In radial mode
the conservative stencil for -(1/r^{d-1}) (r^{d-1} u')' (reflecting origin,
Dirichlet cut at r = L) is similarity transformed by D = diag(r^{(d-1)/2})
into symmetric tridiagonal form; the stored matrix is the symmetric one, so
inertia counting and bisection apply unchanged, while `apply`/`solve_shifted`
map back to physical node values through D.

Eigenvalue counting uses the Sturm/LDL pivot recurrence: the number of
negative pivots of T - sigma*I equals the number of eigenvalues below sigma
(Sylvester).  This is exact in exact arithmetic and does not depend on any
eigensolver tolerance.  A pivot whose magnitude falls below the breakdown
tolerance trips the singular flag; sigma is then nudged by 2^-40 * scale and
the count redone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid, same_grid

#: relative pivot-magnitude threshold treated as breakdown
BREAKDOWN_TOL = 1e-13
#: relative size of the shift nudge applied after a breakdown
NUDGE = 2.0**-40


class NearSingularError(RuntimeError):
    """Shifted solve hit a pivot below tolerance."""

    def __init__(self, pivot_index: int, pivot: float):
        super().__init__(
            f"near-singular shifted system: pivot {pivot:.3e} at index {pivot_index}"
        )
        self.pivot_index = pivot_index
        self.pivot = pivot


@dataclass(frozen=True, eq=False)
class TridiagOperator:
    """Symmetric tridiagonal matrix acting on interior node values."""

    diag: np.ndarray
    offdiag: np.ndarray
    grid: Grid
    symmetrized: bool = field(default=False)  # True when a radial similarity is in play

    def __post_init__(self):
        n = self.grid.n_interior
        if self.diag.shape != (n,) or self.offdiag.shape != (n - 1,):
            raise ValueError("diag/offdiag sizes do not match the grid")
        self.diag.setflags(write=False)
        self.offdiag.setflags(write=False)

    @property
    def n(self) -> int:
        return self.diag.size


def assemble_laplacian(grid: Grid) -> TridiagOperator:
    """Dirichlet Laplacian; positive semidefinite by summation by parts."""
    h2 = grid.spacing**2
    if grid.dim_mode == "line":
        n = grid.n_interior
        diag = np.full(n, 2.0 / h2)
        off = np.full(n - 1, -1.0 / h2)
        return TridiagOperator(diag, off, grid)
    w = grid.weights
    bw = grid.bond_weights
    diag = (bw[:-1] + bw[1:]) / (h2 * w)
    off = -bw[1:-1] / (h2 * np.sqrt(w[:-1] * w[1:]))
    return TridiagOperator(diag, off, grid, symmetrized=True)


def assemble_schrodinger(grid: Grid, potential: Field) -> TridiagOperator:
    """Laplacian plus multiplication by the sampled potential."""
    if not same_grid(potential.grid, grid):
        raise ValueError("potential lives on a different grid")
    lap = assemble_laplacian(grid)
    return TridiagOperator(
        lap.diag + potential.values, lap.offdiag, grid, symmetrized=lap.symmetrized
    )


def _tridiag_matvec(diag, off, v):
    out = diag * v
    out[:-1] += off * v[1:]
    out[1:] += off * v[:-1]
    return out


def apply(T: TridiagOperator, u: Field) -> Field:
    """Matrix-vector product in physical node values."""
    if not same_grid(u.grid, T.grid):
        raise ValueError("field lives on a different grid")
    if T.symmetrized:
        s = T.grid.scale
        return Field(_tridiag_matvec(T.diag, T.offdiag, s * u.values) / s, T.grid)
    return Field(_tridiag_matvec(T.diag, T.offdiag, u.values), T.grid)


def op_norm_bound(T: TridiagOperator) -> float:
    """Gershgorin row-sum bound on the spectral radius."""
    r = np.abs(T.diag).astype(float)
    r[:-1] += np.abs(T.offdiag)
    r[1:] += np.abs(T.offdiag)
    return float(r.max())


def gershgorin_interval(T: TridiagOperator) -> tuple[float, float]:
    rad = np.zeros(T.n)
    rad[:-1] += np.abs(T.offdiag)
    rad[1:] += np.abs(T.offdiag)
    return float(np.min(T.diag - rad)), float(np.max(T.diag + rad))


def _sturm_count(diag: list, off2: list, sigma: float, thresh: float):
    """One pivot sweep; returns (count, broke_down)."""
    count = 0
    d = diag[0] - sigma
    broke = False
    if not math.isfinite(d) or abs(d) < thresh:
        broke = True
        d = -thresh if d <= 0 else thresh  # keep the sweep alive for the retry logic
    if d < 0:
        count = 1
    for i in range(1, len(diag)):
        d = (diag[i] - sigma) - off2[i - 1] / d
        if not math.isfinite(d) or abs(d) < thresh:
            broke = True
            d = -thresh if d <= 0 else thresh
        if d < 0:
            count += 1
    return count, broke


def inertia_below(
    T: TridiagOperator, sigma: float, breakdown_tol: float = BREAKDOWN_TOL
) -> tuple[int, bool]:
    """Exact count of eigenvalues strictly below sigma, plus a breakdown flag.

    On pivot breakdown the shift is nudged by 2^-40 * scale (doubling on
    repeats) and recounted; the flag stays set so callers can see that the
    returned count belongs to a perturbed shift.
    """
    diag = T.diag.tolist()
    off2 = (T.offdiag**2).tolist()
    scale = max(1.0, op_norm_bound(T) + abs(sigma))
    thresh = breakdown_tol * scale
    count, broke = _sturm_count(diag, off2, sigma, thresh)
    if not broke:
        return count, False
    nudge = NUDGE * scale
    for _ in range(3):
        count, broke = _sturm_count(diag, off2, sigma + nudge, thresh)
        if not broke:
            return count, True
        nudge *= 2.0
    return count, True


def count_below_many(T: TridiagOperator, sigmas: np.ndarray) -> np.ndarray:
    """Vectorized Sturm counts for an array of shifts.

    Tiny pivots are clamped to -pivmin (the LAPACK dlaebz convention), which
    can only bias a count at a shift sitting within one ulp of an eigenvalue;
    bisection callers never care.
    """
    sig = np.asarray(sigmas, dtype=np.float64)
    pivmin = BREAKDOWN_TOL * max(1.0, op_norm_bound(T) + float(np.max(np.abs(sig), initial=0.0)))
    diag = T.diag
    off2 = T.offdiag**2
    counts = np.zeros(sig.shape, dtype=np.int64)
    d = np.full(sig.shape, 1.0)
    for i in range(T.n):
        d = (diag[i] - sig) - (off2[i - 1] / d if i else 0.0)
        small = np.abs(d) < pivmin
        if small.any():
            d = np.where(small, -pivmin, d)
        counts += d < 0
    return counts


def solve_shifted(
    T: TridiagOperator, sigma: float, rhs: Field, pivot_tol: float = BREAKDOWN_TOL
) -> Field:
    """Thomas solve of (T - sigma I) u = rhs with an explicit pivot check."""
    if not same_grid(rhs.grid, T.grid):
        raise ValueError("rhs lives on a different grid")
    n = T.n
    scale = max(1.0, op_norm_bound(T) + abs(sigma))
    thresh = pivot_tol * scale
    b = rhs.values
    if T.symmetrized:
        b = b * T.grid.scale
    diag = T.diag
    off = T.offdiag

    cp = np.empty(n - 1)
    y = np.empty(n)
    piv = diag[0] - sigma
    if abs(piv) < thresh:
        raise NearSingularError(0, float(piv))
    y[0] = b[0] / piv
    for i in range(1, n):
        cp[i - 1] = off[i - 1] / piv
        piv = (diag[i] - sigma) - off[i - 1] * cp[i - 1]
        if not np.isfinite(piv) or abs(piv) < thresh:
            raise NearSingularError(i, float(piv))
        y[i] = (b[i] - off[i - 1] * y[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        y[i] -= cp[i] * y[i + 1]
    if T.symmetrized:
        y = y / T.grid.scale
    return Field(y, T.grid)
