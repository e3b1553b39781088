"""Spectral solvers for solitary waves of nonlocal dispersive equations: construction, evolution, stability checks."""
from .analysis import (
    HylomorphyReport,
    StabilityReport,
    bump_profile,
    coercivity_constant,
    gn_exponents,
    hylomorphy_scan,
    orbital_stability_experiment,
    random_perturbation,
    translation_distance,
)
from .evolution import (
    BlowUpError,
    BoxTooSmallWarning,
    EvolutionConfig,
    EvolutionTrace,
    run,
    step_fkdv,
    step_fns,
    weak_residual,
)
from .functionals import (
    Nonlinearity,
    charge,
    charge_fkdv,
    charge_fns,
    energy,
    energy_gradient,
    fkdv_shift,
    fns_shift,
    functional_report,
    hylenic_ratio,
    parse_nonlinearity,
    tail_mass,
)
from .soliton import (
    ConvergenceError,
    HylomorphyRangeWarning,
    SolitonSolution,
    VanishingError,
    exact_bo_soliton,
    find_soliton_gradient_flow,
    petviashvili,
    stationary_residual,
)
from .spectral import (
    Field,
    Grid,
    fractional_derivative,
    hilbert_transform,
    inner,
    l2_norm,
    make_grid,
    shift,
    sobolev_seminorm,
)

__version__ = "0.1.0"
