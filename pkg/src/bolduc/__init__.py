"""Bayesian optimization restricted to low-dimensional affine subspaces,
with local GPR surrogates trained on a contribution-extracted subset of the
observations."""

from .acquisition import AcquisitionConfig, lcb, maximize_full_space, maximize_over_region
from .benchmarks import (
    Benchmark,
    ackley,
    get_benchmark,
    log_regret,
    make_objective,
    normalized_box,
    rosenbrock,
    simple_regret,
    to_native,
    to_normalized,
)
from .exceptions import DegenerateSystemError, EmptyHistoryError, ObjectiveError
from .external import ExternalObjective
from .gpr import (
    Dataset,
    HyperparamBounds,
    Posterior,
    estimate_hyperparams,
    fit_posterior,
    fit_surrogate,
    log_marginal_likelihood,
)
from .harness import ExperimentConfig, ExperimentResult, parse_cli, run_experiment
from .kernels import KernelConfig, distance_to_similarity, eval_kernel, kernel_matrix
from .lsod import (
    HyperparamHistory,
    LsodConfig,
    contribution,
    extract_cumulative,
    extract_lsod,
    extract_tau,
    extract_top_m,
    select_extraction_hyperparams,
)
from .optimizer import (
    RunConfig,
    SwitchState,
    Trace,
    TraceRecord,
    best_point,
    init_design,
    run_bold,
    run_bolduc,
    run_standard_bo,
    should_switch,
)
from .subspace import (
    Box,
    Subspace,
    embed,
    feasible_line_interval,
    is_feasible,
    make_coordinate_line,
    make_random_plane,
    project,
    projection_distance,
)

__version__ = "0.1.0"
