"""Generalized Bayesian likelihood-free inference with scoring-rule posteriors.

The library targets posteriors of the form

    pi_S(theta | y_1..y_n)  propto  pi(theta) * exp(-w * sum_i S(P_theta, y_i))

where S is a scoring rule estimated from model simulations. It ships the
score estimators (energy, gaussian kernel, Dawid-Sebastiani, semiBSL), a
suite of benchmark simulators, a correlated pseudo-marginal MCMC sampler,
hyperparameter heuristics for w and the kernel bandwidth, posterior
predictive diagnostics, and a config-driven experiment runner with a CLI.
"""

from .diagnostics import (ChainSummary, PredictiveCheckReport, chain_summary,
                          per_timestep_score_diff, posterior_predictive_scores,
                          write_timestep_diff_csv)
from .experiments import (ConfigError, ExperimentConfig, apply_override,
                          parse_config, parse_config_dict,
                          read_observations_csv, run_experiment, run_sweep,
                          write_observations_csv)
from .mcmc import (ChainConfig, ChainTrace, DiagonalNormal, FullNormal,
                   IdentityTransform, LogitTransform, RandomGroupState,
                   correlated_pm_step, derive_transform, log_target_estimate,
                   read_trace_csv, run_chain, simulate_grouped,
                   transform_forward, transform_inverse, write_trace_csv)
from .scoring import (DawidSebastianiConfig, EnergyScoreConfig, GaussianKernel,
                      KernelScoreConfig, SemiBSLConfig, ds_score_estimate,
                      energy_score_estimate, fit_semibsl, grc_correlation,
                      kde_marginal, kernel_score_estimate, score_estimate,
                      semibsl_score_estimate, silverman_bandwidth, total_score)
from .simulators import (CauchyOutliers, ContaminationSpec, Gaussian, Model,
                         NormalOutliers, ParamOutliers, Prior, SimulationError,
                         Uniform, MODEL_NAMES, boom_bust_statistics,
                         generate_observations, get_model, gk_transform,
                         lorenz96_rk4_step, lorenz96_statistics,
                         simulate_boom_bust, simulate_gk, simulate_lorenz96,
                         simulate_ma2, simulate_mg1, simulate_multi_gk,
                         simulate_normal_location)
from .tuning import WTuningReport, estimate_bandwidth, estimate_w

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # scoring
    "EnergyScoreConfig", "KernelScoreConfig", "DawidSebastianiConfig",
    "SemiBSLConfig", "GaussianKernel", "energy_score_estimate",
    "kernel_score_estimate", "ds_score_estimate", "semibsl_score_estimate",
    "fit_semibsl", "grc_correlation", "kde_marginal", "silverman_bandwidth",
    "score_estimate", "total_score",
    # simulators
    "SimulationError", "Uniform", "Gaussian", "Prior", "Model", "MODEL_NAMES",
    "get_model", "gk_transform", "simulate_gk", "simulate_multi_gk",
    "simulate_ma2", "simulate_mg1", "simulate_normal_location",
    "simulate_lorenz96", "lorenz96_rk4_step", "lorenz96_statistics",
    "simulate_boom_bust",
    "boom_bust_statistics", "ContaminationSpec", "NormalOutliers",
    "ParamOutliers", "CauchyOutliers", "generate_observations",
    # mcmc
    "ChainConfig", "ChainTrace", "DiagonalNormal", "FullNormal",
    "IdentityTransform", "LogitTransform", "RandomGroupState",
    "derive_transform", "transform_forward", "transform_inverse",
    "simulate_grouped", "log_target_estimate", "correlated_pm_step",
    "run_chain", "write_trace_csv", "read_trace_csv",
    # tuning
    "WTuningReport", "estimate_w", "estimate_bandwidth",
    # diagnostics
    "ChainSummary", "PredictiveCheckReport", "chain_summary",
    "posterior_predictive_scores", "per_timestep_score_diff",
    "write_timestep_diff_csv",
    # experiments
    "ConfigError", "ExperimentConfig", "parse_config", "parse_config_dict",
    "apply_override", "run_experiment", "run_sweep",
    "read_observations_csv", "write_observations_csv",
]
