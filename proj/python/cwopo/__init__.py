"""Heralded single-photon states from a continuous-wave OPO."""

from ._core import (
    ConvergenceError,
    ModeGrid,
    NoClickInformation,
    OpoParams,
    OptimizationResult,
    RadialWigner,
    click_rate,
    click_wigner,
    conditioned_covariance,
    exp_mode,
    fidelity,
    fidelity_degenerate,
    kernel_anomalous,
    kernel_normal,
    lambda_mu,
    mean_intensity,
    normalize,
    optimize,
    production_rate,
)

__all__ = [
    "ConvergenceError",
    "ModeGrid",
    "NoClickInformation",
    "OpoParams",
    "OptimizationResult",
    "RadialWigner",
    "click_rate",
    "click_wigner",
    "conditioned_covariance",
    "exp_mode",
    "fidelity",
    "fidelity_degenerate",
    "kernel_anomalous",
    "kernel_normal",
    "lambda_mu",
    "mean_intensity",
    "normalize",
    "optimize",
    "production_rate",
]
