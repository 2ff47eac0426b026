"""Distributional synthetic controls: estimator, Wasserstein tools and a Monte Carlo lab."""
from .asymptotics import (
    ConvergenceReport,
    DegenerateOracleError,
    OracleSpec,
    convergence_report,
    design_eigen_diagnostic,
    optimal_weights,
    optimality_ratio,
    post_treatment_risk,
    pretreatment_fit_diagnostics,
    weight_distance,
)
from .distributions import ChiSquare, Normal, analytic_quantile, chi_square_quantile, draw_uniforms, normal_quantile
from .estimator import DscFit, QteCurve, aggregate_weights, counterfactual_quantile, fit_dsc, fit_period_weights, qte_curve
from .panel import DrawMode, EstimationConfig, PanelDataset, PanelError, load_panel_csv, min_group_size, resolve_M
from .quantiles import EmpiricalQuantile, build_artificial_sample, fit_empirical_quantile
from .simplex import SolveReport, kkt_residual, project_to_simplex, solve_simplex_ls
from .wasserstein import w2_empirical_equal_n, w2_grid, w2_sq_mc

__version__ = "0.1.0"
