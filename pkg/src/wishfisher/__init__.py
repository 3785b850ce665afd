"""
Wishart-randomized Gaussian model: densities, Fisher information, Jeffreys
prior and Cramer-Rao / Van Trees bounds, with Monte Carlo cross-checks.

Symmetric matrices are handled in the orthonormal half-vector basis of
:mod:`wishfisher.symspace`; operators ``a P(u) + b u(x)u`` live in
:mod:`wishfisher.lops`.
"""

from .bounds import BoundReport, VanTreesProblem, van_trees_bound
from .lops import PQOperator
from .mcverify import EstimatorSpec, McConfig, simulate_estimator
from .model import ModelParams, fisher_information, fisher_inverse
from .suite import run_verification_suite
from .wishart import ShapeDomainError, WishartParams

__all__ = [
    "BoundReport",
    "EstimatorSpec",
    "McConfig",
    "ModelParams",
    "PQOperator",
    "ShapeDomainError",
    "VanTreesProblem",
    "WishartParams",
    "fisher_information",
    "fisher_inverse",
    "run_verification_suite",
    "simulate_estimator",
    "van_trees_bound",
]

__version__ = "0.1.0"
