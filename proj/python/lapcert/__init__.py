"""Randomized graph Laplacian sparsification with bootstrap error certificates.

The heavy lifting lives in the compiled extension; this package re-exports it.
"""

from ._lapcert import (  # noqa: F401
    CoverageReport,
    CoverageRow,
    CutCIResult,
    CutInterval,
    EdgeProbabilities,
    EigCIResult,
    FrobeniusMeanCheck,
    FunctionalSpec,
    Graph,
    ParseError,
    QuantileEstimate,
    RegressionData,
    SolverError,
    SparsifiedSample,
    algorithm1_quantile,
    algorithm2_cut_cis,
    approx_effective_resistance_probs,
    draw_sample,
    edge_weight_probs,
    effective_resistance_probs,
    eigenvalue_cis,
    empirical_quantile,
    extrapolate_quantile,
    forecast_sample_size,
    frobenius,
    frobenius_mean_check,
    frobenius_sq,
    leverage_masses,
    make_complete,
    make_erdos_renyi,
    make_gaussian_kernel_graph,
    make_mixture_points,
    make_path,
    make_random_tree,
    op_norm,
    poisson_stream_sample,
    psi_sample_pair,
    psi_sample_vs_exact,
    regression_l2,
    run_coverage_experiment,
    subsample_by_degree,
    synth_regression_data,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
