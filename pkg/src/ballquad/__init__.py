"""Numerical integration against Jacobi weights on the unit ball.

Gauss-Jacobi rules, reproducing kernels and a product orthonormal basis, positive
product cubature, filtered hyperinterpolation, Monte Carlo with a polynomial
control variate, fooling functions for lower bounds, and an experiment harness.
"""

from .cubature import CertificationError, CubatureRule, build_rule, integrate
from .domain import SeededStream, sample_mu
from .filtering import Filter, FilteredKernel, default_filter
from .hyperinterp import HyperinterpOperator, g_l_apply, int_of_g_l, make_operator
from .orthopoly import WeightConfig
from .randomized import cv_budget, cv_integrate, mc_integrate, replicate_errors

__version__ = "0.1.0"

__all__ = [
    "CertificationError",
    "CubatureRule",
    "Filter",
    "FilteredKernel",
    "HyperinterpOperator",
    "SeededStream",
    "WeightConfig",
    "build_rule",
    "cv_budget",
    "cv_integrate",
    "default_filter",
    "g_l_apply",
    "int_of_g_l",
    "integrate",
    "make_operator",
    "mc_integrate",
    "replicate_errors",
    "sample_mu",
]
