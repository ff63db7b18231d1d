"""Monte Carlo and transfer-operator tools for the random logistic map.

The package simulates ``X_{n+1} = L_{n+1} X_n (1 - X_n)`` with i.i.d. random
parameters, evaluates the one-step transition kernel in closed form, pushes
distributions forward both by particle ensembles and by Ulam's matrix
discretization, and numerically checks the structural properties (kernel
minorization, reachability, recurrence, convergence of initial laws) that
make the invariant distribution unique and attracting.
"""

from .core import (
    SupportInterval,
    beta_invariant_cdf,
    beta_invariant_density,
    deterministic_support_interval,
    fixed_point,
    fixed_point_band,
    iterate_deterministic,
    logistic_step,
)
from .ensemble import (
    DiscreteWeighted,
    Ensemble,
    HittingTimeSummary,
    SeedPolicy,
    TruncatedExponential,
    TruncatedGamma,
    TruncatedNormal,
    TruncatedStudentT,
    Uniform01,
    hitting_time_stats,
    initial_law_catalog,
    run,
    sample_initial,
    step_ensemble,
)
from .kernel import (
    IntervalSet,
    PiecewiseConstant,
    TwoPoint,
    UniformInterval,
    image_interval,
    n_step_prob,
    push_forward,
    transition_density,
    transition_prob,
)
from .measure import (
    DistanceReport,
    EmpiricalMeasure,
    cesaro_average,
    compare,
    histogram,
    ks_statistic,
    l1_density_distance,
    rebin,
    tv_distance,
)
from .ulam import (
    InvariantVector,
    PowerIterationError,
    UlamOperator,
    apply_operator,
    build_ulam,
    invariant_vector,
    operator_power_positivity,
    second_eigenvalue_estimate,
)
from .verify import (
    MinorizationConfig,
    VerificationReport,
    convergence_matrix,
    minorization_check,
    reachability_probe,
    recurrence_stats,
    two_map_support_check,
)

__version__ = "0.1.0"
