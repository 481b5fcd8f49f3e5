"""Thinning, superposition and Poisson limits for counts and point processes."""

from .distributions import (
    Bernoulli,
    Binomial,
    Deterministic,
    Estimate,
    FinitePmf,
    Pmf,
    PointMass,
    Poisson,
    apgf_empirical,
    apgf_exact,
    factorial_moment,
    laplace_empirical,
    laplace_exact,
    pmf_thinned_sum_exact,
    scaled_sum_sample,
    thin_count,
    thinned_sum_sample,
)
from .point_process import (
    Atomic,
    BinomialProcess,
    ConstantDensity,
    FixedAtoms,
    GridDensity,
    NeymanScott,
    PointPattern,
    PoissonProcess,
    Region,
    Window,
    count_in,
    intensity_of_spec,
    measure_of,
    sample_process,
    superpose,
    thin_pattern,
    thinned_superposition_sample,
)
from .functionals import (
    GridFunction,
    ScaledIndicator,
    apgfl_empirical,
    apgfl_exact,
    apgfl_on_pattern,
    apgfl_poisson,
    default_dictionary,
    eval_test,
    first_order_residual,
    integrate,
)
from .convergence import (
    large_numbers_check,
    poisson_pmf,
    thin_numbers_curve,
    thin_processes_curve,
    tv_distance,
    two_sample_count_tv,
)
from .streams import stream

__version__ = "0.1.0"
