"""Robust Bayesian optimisation of expensive black-box functions.

A Gaussian-process surrogate drives a Monte-Carlo sweet-spot expected
improvement acquisition that searches for ball-shaped regions of design space
with good worst-case performance, rather than single fragile optima.
"""

from .acquisition import (
    BestSoFar,
    best_sweetspot,
    ei_sweetspot,
    expected_improvement,
    make_ei_objective,
    make_quality_objective,
    propose,
    propose_point_ei,
)
from .benchmarks import REGISTRY, Benchmark, get_benchmark
from .errors import (
    DegenerateDataWarning,
    NoFeasibleCentre,
    OutOfBounds,
    SingularKernel,
    SweetspotError,
)
from .evo import BallRegion, BoxRegion, EvoConfig, NeighbourhoodRegion, maximise
from .gp import (
    Dataset,
    GpModel,
    KernelParams,
    fit,
    log_marginal_likelihood,
    matern52,
    matern52_matrix,
    predict,
)
from .harness import (
    ExperimentConfig,
    IterationRow,
    RunRecord,
    Summary,
    export,
    export_summary,
    load_records,
    run_experiment,
    summarise,
)
from .oracle import RobustLandscape, build_landscape, load_or_build, true_robust_optimum
from .realisation import Realisation, draw_initial
from .region import (
    SweetSpot,
    SweetSpotShape,
    contains,
    in_neighbourhood,
    quality_average,
    quality_worst,
    sample_interior,
)
from .stats import (
    SeedStream,
    latin_hypercube,
    median_abs_deviation,
    norm_pdf_cdf,
    sample_unit_ball,
    wilcoxon_signed_rank,
)
from .strategies import SamplingStrategy, select

__version__ = "0.1.0"
