"""Spatial discretization of the truncated domain.

Line mode covers [-L, L] with n interior nodes, spacing h = 2L/(n+1) and
homogeneous Dirichlet values at both ends (the truncation surrogate for decay
at infinity).  Radial mode covers [0, L] with h = L/(n+1), a reflecting
(Neumann) origin and a Dirichlet cut at r = L; quadrature weights r^(d-1)
make the discrete inner product match the radial measure (solid-angle
constants are dropped, they rescale nothing that matters).

Discrete norms:
    l2(u)^2 = h * sum_i w_i u_i^2
    h1(u)^2 = l2(u)^2 + h * sum_bonds bw_j ((u_{j+1} - u_j)/h)^2
with zero padding at Dirichlet ends.  The bond weights are chosen so that
summation by parts against the assembled Laplacian is exact.

The smooth cutoff family theta_k(x) = theta(|x|^2 / k^2) uses the fixed ramp
    theta(s) = rho(s - 1) / (rho(s - 1) + rho(2 - s)),   rho(t) = exp(-1/t) for t > 0 else 0,
so theta == 0 on s <= 1 and theta == 1 on s >= 2.  Its derivative bound
sup |theta'| is computed numerically once and cached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DIM_MODES = ("line", "radial2", "radial3")


@dataclass(frozen=True, eq=False)
class Grid:
    """Truncated symmetric mesh; immutable after construction."""

    half_width: float
    n_interior: int
    spacing: float
    dim_mode: str
    nodes: np.ndarray
    # quadrature weight per node and per bond (bond j couples node j and j+1,
    # with node 0 and node n+1 the zero-padded boundary)
    weights: np.ndarray = field(repr=False)
    bond_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.nodes, self.weights, self.bond_weights):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return 1 if self.dim_mode == "line" else int(self.dim_mode[-1])

    @property
    def scale(self) -> np.ndarray:
        """Similarity scale sqrt(weights); identity in line mode."""
        return np.sqrt(self.weights)


@dataclass(frozen=True, eq=False)
class Field:
    """Real grid function on the interior nodes (boundary values are zero)."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        if self.values.shape != (self.grid.n_interior,):
            raise ValueError(
                f"field has {self.values.shape} values, grid has {self.grid.n_interior} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        self.values.setflags(write=False)


def same_grid(a: Grid, b: Grid) -> bool:
    return a is b or (
        a.half_width == b.half_width
        and a.n_interior == b.n_interior
        and a.dim_mode == b.dim_mode
    )


def make_grid(half_width: float, n_interior: int, dim_mode: str = "line") -> Grid:
    """Build the mesh; h = 2L/(n+1) in line mode, L/(n+1) in radial mode."""
    if not half_width > 0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    if n_interior < 3:
        raise ValueError(f"need at least 3 interior nodes, got {n_interior}")
    if dim_mode not in DIM_MODES:
        raise ValueError(f"dim_mode must be one of {DIM_MODES}, got {dim_mode!r}")

    n = int(n_interior)
    L = float(half_width)
    if dim_mode == "line":
        h = 2.0 * L / (n + 1)
        nodes = -L + h * np.arange(1, n + 1, dtype=np.float64)
        weights = np.ones(n)
        bond_weights = np.ones(n + 1)
    else:
        d = int(dim_mode[-1])
        h = L / (n + 1)
        nodes = h * np.arange(1, n + 1, dtype=np.float64)
        weights = nodes ** (d - 1)
        mid = h * (np.arange(0, n + 1, dtype=np.float64) + 0.5)
        bond_weights = mid ** (d - 1)
        # reflecting origin: the half-bond below the first node carries no flux
        bond_weights[0] = 0.0
    return Grid(L, n, h, dim_mode, nodes, weights, bond_weights)


def make_field(grid: Grid, values) -> Field:
    return Field(np.array(values, dtype=np.float64), grid)


def zero_field(grid: Grid) -> Field:
    return Field(np.zeros(grid.n_interior), grid)


def l2_norm_sq(u: Field) -> float:
    g = u.grid
    return float(g.spacing * np.dot(g.weights * u.values, u.values))


def h1_seminorm_sq(u: Field) -> float:
    g = u.grid
    diffs = np.diff(u.values, prepend=0.0, append=0.0) / g.spacing
    return float(g.spacing * np.dot(g.bond_weights * diffs, diffs))


def norms(u: Field) -> tuple[float, float]:
    """Discrete (l2, h1) norms; h1^2 = l2^2 + Dirichlet-form seminorm^2."""
    l2sq = l2_norm_sq(u)
    return np.sqrt(l2sq), np.sqrt(l2sq + h1_seminorm_sq(u))


def _rho(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_ramp(s) -> np.ndarray:
    """C-infinity ramp: 0 on s <= 1, 1 on s >= 2, strictly increasing between."""
    scalar = np.isscalar(s)
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    a = _rho(s - 1.0)
    b = _rho(2.0 - s)
    out = a / (a + b)  # denominator is positive everywhere: a > 0 or b > 0
    return float(out[0]) if scalar else out


@lru_cache(maxsize=1)
def ramp_derivative_bound() -> float:
    """sup |theta'| over the ramp, by dense sampling plus one refinement pass."""
    s = np.linspace(1.0, 2.0, 200_001)
    d = np.gradient(smooth_ramp(s), s)
    i = int(np.argmax(d))
    lo, hi = s[max(i - 2, 0)], s[min(i + 2, len(s) - 1)]
    s2 = np.linspace(lo, hi, 40_001)
    step = s2[1] - s2[0]
    d2 = (smooth_ramp(s2 + step) - smooth_ramp(s2 - step)) / (2 * step)
    return float(max(d.max(), d2.max()))


def cutoff_weights(grid: Grid, k: float) -> Field:
    """theta_k sampled at the nodes: 0 on |x| <= k, 1 on |x| >= sqrt(2) k."""
    if not k > 0:
        raise ValueError(f"cutoff radius must be positive, got {k}")
    vals = smooth_ramp(grid.nodes**2 / k**2)
    return Field(vals, grid)


def tail_mass(u: Field, k: float) -> float:
    """Weighted mass h * sum theta_k(x_i) w_i u_i^2 beyond radius k."""
    if not k > 0:
        raise ValueError(f"cutoff radius must be positive, got {k}")
    g = u.grid
    theta = smooth_ramp(g.nodes**2 / k**2)
    return float(g.spacing * np.sum(theta * g.weights * u.values**2))
