"""Sample average approximation of chance constraints under distribution drift.

Finite-sample bounds on the probability that the (robust) SAA feasible set
contains a decision violating the chance constraint at the next time step,
with a Monte Carlo harness to check them.
"""

from .bounds import (
    BoundValue,
    best_luedtke_beta,
    bound_luedtke,
    bound_thm1,
    bound_thm2,
    bound_thm3,
    bound_thm5,
    covering_factor,
    penalties,
)
from .distributions import (
    DistributionSequence,
    DistributionSpec,
    SupportSet,
    VariationBudget,
    draw_points,
    make_drifting_sequence,
    stationary_sequence,
    wasserstein_distance,
)
from .errors import (
    BoundInapplicableError,
    BudgetViolationError,
    DomainError,
    EmptyUncertaintySetError,
    NoClosedFormError,
    RobustSAAError,
    SchemaError,
)
from .harness import (
    EstimateResult,
    RadiiRule,
    TrialConfig,
    estimate_infeasibility,
    sweep_bound_comparison,
    verify_corollary4,
    wilson_interval,
)
from .kernels import binomial_cdf, hoeffding_tail, min_sample_size, poisson_binomial_cdf
from .saa import (
    BiAffineConstraint,
    BlackBoxConstraint,
    DecisionSet,
    ProblemInstance,
    RiskConfig,
    SampleBatch,
    draw_sequence,
    empirical_violation,
    feasible_set,
    radii_from_theta,
    robust_empirical_violation,
    robust_sup,
    solve_by_enumeration,
    true_violation_probability,
)

__version__ = "0.1.0"
