"""Outlier-robust compressed sensing with generator-network priors."""

from .errors import InvalidInputError, NoBudgetError, ShapeError, UnsupportedOperationError
from .generator import (Activation, GeneratorNet, Layer, composite_weight, forward,
                        init_gaussian, jacobian)
from .numerics import gaussian_matrix, numerical_rank, pseudo_inverse, soft_threshold
from .sensing import Observation, OutlierSpec, SensingModel, make_outliers, observe, outlier_budget
from .solvers import (AdmmConfig, Backtracking, FixedStep, GdConfig, SolveResult, admm_solve,
                      gd_solve, solve_with_restarts)

__all__ = [
    "Activation", "AdmmConfig", "Backtracking", "FixedStep", "GdConfig", "GeneratorNet",
    "InvalidInputError", "Layer", "NoBudgetError", "Observation", "OutlierSpec",
    "SensingModel", "ShapeError", "SolveResult", "UnsupportedOperationError", "admm_solve",
    "composite_weight", "forward", "gaussian_matrix", "gd_solve", "init_gaussian", "jacobian",
    "make_outliers", "numerical_rank", "observe", "outlier_budget", "pseudo_inverse",
    "soft_threshold", "solve_with_restarts",
]
