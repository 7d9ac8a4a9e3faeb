"""Bandit importance sampling on deterministic low-discrepancy streams.

The package turns a fixed evaluation budget into a weighted sample set:
a GP surrogate fit to past evaluations scores a candidate pool through an
upper bound on the integrand, the best candidate is evaluated, and the
final set is self-normalized. Metrics, calibrated target densities, and an
experiment harness round out the toolkit.
"""

__version__ = "0.1.0"

from .acquisition import Phi, transform_output, ujb, ujb_log
from .gp import (
    GPFitError,
    GPPosterior,
    GPPrior,
    Hyperparameters,
    KernelSpec,
    MeanSpec,
    MleConfig,
    TrainingSet,
    fit,
    log_marginal_likelihood,
    mle_fit,
    profile_quadratic_mean,
)
from .lowdisc import Domain, HaltonStream, halton_point, scale_to_domain
from .metrics import (
    GapCheckResult,
    MmdKernel,
    kde_evaluate,
    mmd,
    mmd_self_term,
    mmd_squared,
    silverman_bandwidth,
    tvd_numeric,
    ujb_l2_gap_check,
)
from .sampler import (
    BisConfig,
    CandidatePool,
    IterationRecord,
    UniformStream,
    WeightedSampleSet,
    bis_run,
    randomized_bo_is,
    self_normalize,
    standard_is,
)
from .targets import (
    BENCHMARKS,
    LOG_DENSITY_SENTINEL,
    CustomTarget,
    TargetDensity,
)

__all__ = [
    "__version__",
    "BENCHMARKS",
    "BisConfig",
    "CandidatePool",
    "CustomTarget",
    "Domain",
    "GapCheckResult",
    "GPFitError",
    "GPPosterior",
    "GPPrior",
    "HaltonStream",
    "Hyperparameters",
    "IterationRecord",
    "KernelSpec",
    "LOG_DENSITY_SENTINEL",
    "MeanSpec",
    "MleConfig",
    "MmdKernel",
    "Phi",
    "TargetDensity",
    "TrainingSet",
    "UniformStream",
    "WeightedSampleSet",
    "bis_run",
    "fit",
    "halton_point",
    "kde_evaluate",
    "log_marginal_likelihood",
    "mle_fit",
    "mmd",
    "mmd_self_term",
    "mmd_squared",
    "profile_quadratic_mean",
    "randomized_bo_is",
    "scale_to_domain",
    "self_normalize",
    "silverman_bandwidth",
    "standard_is",
    "transform_output",
    "tvd_numeric",
    "ujb",
    "ujb_l2_gap_check",
    "ujb_log",
]
