"""The nonlinearity F(x, u) and its hypothesis checkers.

One parametric family covers every run: the "switch" model

    F(x, u) = gamma(x) u (1 - psi(u/s0)) + alpha(x) u psi(u/s0),
    psi(v)  = v^2 / (1 + v^2),

which interpolates between slope gamma(x) at u = 0 and slope alpha(x) as
|u| -> infinity.  Both slopes come from a PotentialSpec: a negative constant
base -nu_tilde plus a localized well bump, so the two Schrodinger operators
-Lap - alpha and -Lap - gamma have essential spectrum above nu_tilde and
finitely many bound states below it.

The family has exact closed forms for dF/du and the antiderivative
P(x, u) = int_0^u F(x, s) ds, which the energy functional needs:

    P = 1/2 gamma u^2 + (alpha - gamma)/2 * (u^2 - s0^2 log(1 + u^2/s0^2)).

Two extensions used by the experiments, both preserving the closed forms:
an additive x-only source term (perturbs F(., 0) only) and a convex blend
lam*F + (1-lam)*B against the linear model B(x, u) = alpha(x) u.

Checkers are sampling based: they report the worst violation over a sample
lattice, they do not prove anything symbolically.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .grid import Grid

WELL_KINDS = ("zero", "gaussian", "square_well")

# sup over v of psi(v) + v psi'(v), attained at v = sqrt(3); bounds the
# switch term in dF/du
SWITCH_GAIN_MAX = 9.0 / 8.0


@dataclass(frozen=True)
class Well:
    """Localized bump: amplitude * exp(-(x/width)^2), a box, or zero."""

    kind: str = "zero"
    amplitude: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in WELL_KINDS:
            raise ValueError(f"well kind must be one of {WELL_KINDS}, got {self.kind!r}")
        if self.kind != "zero" and not self.width > 0:
            raise ValueError(f"well width must be positive, got {self.width}")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-((x / self.width) ** 2))
        if self.kind == "square_well":
            return self.amplitude * (np.abs(x) <= self.width)
        return np.zeros_like(x)


ZERO_WELL = Well()


@dataclass(frozen=True)
class PotentialSpec:
    """Slope profile -base_level + well(x); base_level is the nu_tilde > 0."""

    base_level: float
    well: Well = ZERO_WELL

    def __post_init__(self):
        if not self.base_level > 0:
            raise ValueError(f"base_level must be positive, got {self.base_level}")

    def slope(self, x):
        return -self.base_level + self.well(x)

    def potential(self, x):
        """Schrodinger potential -slope(x), i.e. base_level - well(x)."""
        return self.base_level - self.well(x)


@dataclass(frozen=True)
class NonlinearityModel:
    """Switch family plus dissipativity data (nu, q, b, c).

    lam blends against the linear-at-infinity model B(x,u) = alpha(x) u:
    the effective nonlinearity is lam*F_switch + (1-lam)*B.  source(x) is
    added to F afterwards, so F(x, 0) = source(x).
    """

    alpha: PotentialSpec
    gamma: PotentialSpec
    s0: float
    nu: float
    q: float = 2.0
    b: Well | None = None  # None: auto certificate max(0, max(alpha,gamma)+nu)
    c: Well = ZERO_WELL
    source: Well = ZERO_WELL
    lam: float = 1.0

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError(f"switch scale s0 must be positive, got {self.s0}")
        if not self.nu > 0:
            raise ValueError(f"dissipativity rate nu must be positive, got {self.nu}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"blend weight lam must lie in [0, 1], got {self.lam}")

    def linear_slope(self, x):
        """dF/du at u = 0 for the blended model."""
        return self.lam * self.gamma.slope(x) + (1.0 - self.lam) * self.alpha.slope(x)

    def b_values(self, x):
        if self.b is not None:
            return self.b(x)
        worst = np.maximum(self.alpha.slope(x), self.gamma.slope(x))
        return np.maximum(0.0, worst + self.nu)

    def c_values(self, x):
        return self.c(x)


def build_switch_model(
    alpha: PotentialSpec,
    gamma: PotentialSpec,
    s0: float,
    nu: float | None = None,
    q: float = 2.0,
    b: Well | None = None,
    c: Well = ZERO_WELL,
) -> NonlinearityModel:
    """Assemble the model; nu defaults to the smaller of the two base levels,
    which makes the auto b certificate vanish when neither slope has a well."""
    if nu is None:
        nu = min(alpha.base_level, gamma.base_level)
    return NonlinearityModel(alpha=alpha, gamma=gamma, s0=s0, nu=nu, q=q, b=b, c=c)


def blend(m: NonlinearityModel, lam: float) -> NonlinearityModel:
    """lam*F + (1-lam)*B with B(x,u) = alpha(x) u; expects an unblended m."""
    if m.lam != 1.0:
        raise ValueError("blend expects an unblended model (lam == 1)")
    return dataclasses.replace(m, lam=float(lam))


def with_source(m: NonlinearityModel, source: Well) -> NonlinearityModel:
    return dataclasses.replace(m, source=source)


def _switch_parts(u, s0):
    """psi(u/s0) and psi + v psi' in overflow-safe form (w = 1/(1+v^2))."""
    v2 = (np.asarray(u, dtype=np.float64) / s0) ** 2
    w = 1.0 / (1.0 + v2)
    psi = 1.0 - w
    gain = 1.0 + w - 2.0 * w * w
    return psi, gain


def _as_scalar_or_array(out, *inputs):
    if all(np.isscalar(v) for v in inputs):
        return float(out)
    return out


def eval_F(m: NonlinearityModel, x, u):
    xa = np.asarray(x, dtype=np.float64)
    ua = np.asarray(u, dtype=np.float64)
    psi, _ = _switch_parts(ua, m.s0)
    ag = m.alpha.slope(xa) - m.gamma.slope(xa)
    out = ua * (m.linear_slope(xa) + m.lam * ag * psi) + m.source(xa)
    return _as_scalar_or_array(out, x, u)


def eval_dF(m: NonlinearityModel, x, u):
    xa = np.asarray(x, dtype=np.float64)
    ua = np.asarray(u, dtype=np.float64)
    _, gain = _switch_parts(ua, m.s0)
    ag = m.alpha.slope(xa) - m.gamma.slope(xa)
    out = m.linear_slope(xa) + m.lam * ag * gain
    return _as_scalar_or_array(out, x, u)


def eval_P(m: NonlinearityModel, x, u):
    """Antiderivative of F in u with P(x, 0) = 0, in closed form."""
    xa = np.asarray(x, dtype=np.float64)
    ua = np.asarray(u, dtype=np.float64)
    t = (ua / m.s0) ** 2
    ag = m.alpha.slope(xa) - m.gamma.slope(xa)
    out = (
        0.5 * ua**2 * m.linear_slope(xa)
        + m.lam * ag * (0.5 * m.s0**2) * (t - np.log1p(t))
        + m.source(xa) * ua
    )
    return _as_scalar_or_array(out, x, u)


def check_dissipativity(m: NonlinearityModel, x_samples, u_samples) -> float:
    """Worst value of F(x,u)u + nu u^2 - b(x)|u|^q - c(x) over the lattice.

    Nonpositive return certifies the sampled configuration; a positive
    return is a report, not an error.
    """
    xs = np.asarray(x_samples, dtype=np.float64)
    us = np.asarray(u_samples, dtype=np.float64)
    if xs.size == 0 or us.size == 0:
        raise ValueError("sample sets must be nonempty")
    X = xs[:, None]
    U = us[None, :]
    lhs = eval_F(m, X, U) * U + m.nu * U**2
    rhs = m.b_values(X) * np.abs(U) ** m.q + m.c_values(X)
    return float(np.max(lhs - rhs))


def check_asymptotic_slopes(
    m: NonlinearityModel, x_samples, u_large: float, u_small: float = 1e-6
) -> tuple[float, float]:
    """Deviation from the slope targets: at infinity via F(x, u_large)/u_large
    against alpha(x), at zero via dF/du(x, 0) against gamma(x)."""
    if not u_large > u_small > 0:
        raise ValueError(f"need u_large > u_small > 0, got {u_large}, {u_small}")
    xs = np.asarray(x_samples, dtype=np.float64)
    dev_inf = float(np.max(np.abs(eval_F(m, xs, u_large) / u_large - m.alpha.slope(xs))))
    dev_zero = float(np.max(np.abs(eval_dF(m, xs, 0.0) - m.gamma.slope(xs))))
    return dev_inf, dev_zero


def lipschitz_bound(m: NonlinearityModel, x_samples) -> float:
    """Certified sup |dF/du|: the switch gain lies in [0, 9/8], so per x the
    extreme values sit at gain 0 and gain 9/8."""
    xs = np.asarray(x_samples, dtype=np.float64)
    lin = m.linear_slope(xs)
    ag = m.lam * (m.alpha.slope(xs) - m.gamma.slope(xs))
    return float(np.max(np.maximum(np.abs(lin), np.abs(lin + SWITCH_GAIN_MAX * ag))))


class SampledModel:
    """Model with slope/source profiles cached on a grid, for hot loops."""

    def __init__(self, m: NonlinearityModel, grid: Grid):
        self.model = m
        self.grid = grid
        x = grid.nodes
        self.alpha_vals = m.alpha.slope(x)
        self.gamma_vals = m.gamma.slope(x)
        self.lin = m.linear_slope(x)
        self.switch_amp = m.lam * (self.alpha_vals - self.gamma_vals)
        self.source_vals = m.source(x)
        self.s0 = m.s0

    def F(self, u: np.ndarray) -> np.ndarray:
        psi, _ = _switch_parts(u, self.s0)
        return u * (self.lin + self.switch_amp * psi) + self.source_vals

    def dF(self, u: np.ndarray) -> np.ndarray:
        _, gain = _switch_parts(u, self.s0)
        return self.lin + self.switch_amp * gain

    def P(self, u: np.ndarray) -> np.ndarray:
        t = (u / self.s0) ** 2
        return (
            0.5 * u**2 * self.lin
            + self.switch_amp * (0.5 * self.s0**2) * (t - np.log1p(t))
            + self.source_vals * u
        )


def sample_on(m: NonlinearityModel, grid: Grid) -> SampledModel:
    return SampledModel(m, grid)
