"""Newton's recursive quasi-Bayes estimator for mixing distributions."""

from .asymptotics import (
    PosteriorSummary,
    cov_hat,
    credible_interval,
    credible_region,
    marginal_posterior_approx,
    rate,
    summarize,
    v_hat,
)
from .errors import (
    DegenerateEvidenceError,
    DomainError,
    LayoutError,
    NumericalDomainError,
    UnsupportedScheduleError,
)
from .kernels import FlatKernel, GammaFixedShape, GaussianLocation, Poisson, parse_kernel
from .mixing import (
    AtomSet,
    DiscreteMixing,
    GridDensity,
    Indicator,
    Interval,
    halfline,
    integrate,
    l1_distance,
    measure_of,
    normal_grid,
    normal_mixture_grid,
    parse_mixing,
    point_mass,
)
from .recursion import (
    EstimatorState,
    Explicit,
    Piecewise,
    Polynomial,
    classify,
    fit,
    gamma_weights,
    parse_schedule,
    posterior_given_x,
    predictive_density,
    reconstruct_from_gamma,
    update,
)
from .simulate import (
    permutation_averaged_fit,
    permute,
    simulate_cid,
    simulate_cid_replicas,
    simulate_iid_mixture,
)

__version__ = "0.1.0"
