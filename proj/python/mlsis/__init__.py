"""Python bindings for the mlsis rare-event estimators."""

from ._core import (
    DegenerateWeights,
    InvalidArgument,
    ModelEvaluationError,
    NonConvergence,
    cost_units,
    csv_header,
    estimate,
    estimate_csv,
    evaluate,
    fit_vmfn,
    flowcell_travel_time,
    kl_eigenvalues_1d,
    mc_reference,
    rel_rmse,
    sample_vmfn,
    solve_sigma,
    std_normal_log_cdf,
)

__all__ = [
    "DegenerateWeights",
    "InvalidArgument",
    "ModelEvaluationError",
    "NonConvergence",
    "cost_units",
    "csv_header",
    "estimate",
    "estimate_csv",
    "evaluate",
    "fit_vmfn",
    "flowcell_travel_time",
    "kl_eigenvalues_1d",
    "mc_reference",
    "rel_rmse",
    "sample_vmfn",
    "solve_sigma",
    "std_normal_log_cdf",
]
