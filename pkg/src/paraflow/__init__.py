"""Numerical lab for dissipative semilinear heat flows u_t - u_xx = F(x, u)
on truncated symmetric grids.

Submodules:
    grid       spatial mesh, discrete L2/H1 norms, smooth cutoff family, tail masses
    model      the switch nonlinearity family and its hypothesis checkers
    operator   symmetric tridiagonal operators, exact inertia counts, shifted solves
    spectrum   eigenvalue bisection, inverse iteration, non-resonance reports
    semiflow   IMEX time integration with energy/tail/blow-up monitors
    equilibria Newton solves, Morse indices, equilibrium census, homotopy bound scan
    connect    heteroclinic search from the unstable directions at zero
    cli        TOML-configured experiment runner emitting CSV artifacts
"""

from .grid import Field, Grid, cutoff_weights, make_field, make_grid, norms, tail_mass
from .model import (
    NonlinearityModel,
    PotentialSpec,
    Well,
    blend,
    build_switch_model,
    check_asymptotic_slopes,
    check_dissipativity,
    eval_F,
    eval_P,
    eval_dF,
)
from .operator import (
    NearSingularError,
    TridiagOperator,
    apply,
    assemble_laplacian,
    assemble_schrodinger,
    inertia_below,
    solve_shifted,
)
from .spectrum import (
    SpectralReport,
    count_negative,
    eigenvalues_below,
    eigenvector,
    nonresonance_report,
)
from .semiflow import (
    MonitorConfig,
    TrajectoryRecord,
    admissibility_experiment,
    convergence_experiment,
    dissipation_check,
    energy,
    evolve,
    step_imex,
    tail_bound_check,
)
from .equilibria import (
    Equilibrium,
    find_equilibria,
    homotopy_bound_scan,
    morse_index,
    newton_solve,
)
from .connect import (
    ConnectionRecord,
    EquilibriumCensus,
    classify_limit,
    heteroclinic_search,
)

__version__ = "0.1.0"

__all__ = [
    "Field", "Grid", "cutoff_weights", "make_field", "make_grid", "norms", "tail_mass",
    "NonlinearityModel", "PotentialSpec", "Well", "blend", "build_switch_model",
    "check_asymptotic_slopes", "check_dissipativity", "eval_F", "eval_P", "eval_dF",
    "NearSingularError", "TridiagOperator", "apply", "assemble_laplacian",
    "assemble_schrodinger", "inertia_below", "solve_shifted",
    "SpectralReport", "count_negative", "eigenvalues_below", "eigenvector",
    "nonresonance_report",
    "MonitorConfig", "TrajectoryRecord", "admissibility_experiment",
    "convergence_experiment", "dissipation_check", "energy", "evolve", "step_imex",
    "tail_bound_check",
    "Equilibrium", "find_equilibria", "homotopy_bound_scan", "morse_index",
    "newton_solve",
    "ConnectionRecord", "EquilibriumCensus", "classify_limit", "heteroclinic_search",
]
