"""Closed-form entropic optimal transport between Gaussian measures."""
from .barycenter import (
    BarycenterProblem,
    BarycenterSolution,
    barycenter_residual,
    eval_objective,
    make_problem,
    solve_barycenter,
)
from .cost import (
    CostBreakdown,
    ReferenceMeasure,
    best_approximation,
    cost_1d,
    entropic_cost,
    gelbrich_lower_bound,
    relative_entropic_cost,
)
from .exceptions import (
    ConvergenceError,
    DefinitenessError,
    DimensionError,
    GaussianOTError,
    NumericalError,
    ResourceError,
    SymmetryError,
    ValidationError,
)
from .oracle import (
    DiscreteMeasure,
    SinkhornResult,
    discretize_box,
    discretize_gaussian,
    discretize_uniform,
    oracle_cost,
    oracle_solve,
    sinkhorn_solve,
)
from .riccati import (
    EntropicPlan,
    QuadraticPotential,
    RiccatiSolution,
    alt_riccati,
    assemble_plan,
    riccati_residual,
    solve_riccati,
)
from .spd import Gaussian, SpdFactorization, SpdMatrix, as_spd, spd_factor, validate_gaussian

__version__ = "0.1.0"
