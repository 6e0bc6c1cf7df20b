"""prunelab: theory and simulation for data pruning in high-dimensional
ridge classification.

The package predicts the test error of ridge regression on sign labels when
the training pool is pruned by margin-based example selection, and checks
those predictions with finite-size simulations:

- :mod:`prunelab.selection` — selection strategies (keep-all, keep-hard,
  keep-easy, sigmoid-power) and their Gaussian moment scalars.
- :mod:`prunelab.spectral` — distorted Marchenko–Pastur resolvent, its
  companions, and the asymptotic test-error prediction, including exact
  ridgeless limits on both sides of the interpolation threshold.
- :mod:`prunelab.simulate` — finite-size experiments with counter-based
  random streams and exact test-error evaluation.
- :mod:`prunelab.practice` — adaptive pool-growth training loop and the
  paired adaptive-vs-static comparison.
- :mod:`prunelab.config`, :mod:`prunelab.sweep`, :mod:`prunelab.svgplot`,
  :mod:`prunelab.figures`, :mod:`prunelab.cli` — experiment harness: config
  files, deterministic CSV sweeps, dependency-free SVG plots, matplotlib
  report figures, and the command-line interface.
"""

from .practice import (
    DPConfig,
    DPEvent,
    DPHistory,
    PairedReport,
    compare_adaptive_static,
    run_dp,
)
from .selection import (
    NoClosedFormError,
    SelectionStrategy,
    StrategyScalars,
    eval_q,
    format_strategy,
    keep_all,
    keep_easy,
    keep_hard,
    mean_vector_coeffs,
    parse_strategy,
    scalars_closed_form,
    scalars_quadrature,
    sigmoid_power,
    strategy_keep_prob,
    strategy_scalars,
    threshold_for_keep_prob,
    validate_rho,
)
from .simulate import (
    CellAggregate,
    ExperimentConfig,
    FitResult,
    estimate_mean_vectors,
    exact_error_from_cosine,
    fit_pool,
    make_directions,
    mc_test_error,
    run_cell,
    run_trial,
    stream,
)
from .spectral import (
    AtThresholdError,
    FixedPointError,
    InvalidPredictionError,
    RegimeParams,
    RidgelessPathError,
    SpectralState,
    TheoryPrediction,
    fixed_point_t,
    ridgeless_test_error,
    spectral_state,
    stieltjes_m,
    stieltjes_m_prime,
    theory_test_error,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # selection
    "SelectionStrategy",
    "StrategyScalars",
    "NoClosedFormError",
    "keep_all",
    "keep_hard",
    "keep_easy",
    "sigmoid_power",
    "format_strategy",
    "parse_strategy",
    "threshold_for_keep_prob",
    "eval_q",
    "scalars_closed_form",
    "scalars_quadrature",
    "strategy_scalars",
    "strategy_keep_prob",
    "mean_vector_coeffs",
    "validate_rho",
    # spectral
    "RegimeParams",
    "SpectralState",
    "TheoryPrediction",
    "RidgelessPathError",
    "AtThresholdError",
    "InvalidPredictionError",
    "FixedPointError",
    "stieltjes_m",
    "stieltjes_m_prime",
    "fixed_point_t",
    "spectral_state",
    "theory_test_error",
    "ridgeless_test_error",
    # simulate
    "ExperimentConfig",
    "FitResult",
    "CellAggregate",
    "stream",
    "make_directions",
    "fit_pool",
    "run_trial",
    "run_cell",
    "mc_test_error",
    "estimate_mean_vectors",
    "exact_error_from_cosine",
    # practice
    "DPConfig",
    "DPEvent",
    "DPHistory",
    "PairedReport",
    "run_dp",
    "compare_adaptive_static",
]
