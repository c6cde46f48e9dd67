"""Boundary blow-up rates for -Lap u = a u - b(x) f(u), u = inf on the boundary."""
__version__ = "0.1.0"

from .errors import (BlowupLabError, ConfigError, DivergenceError, DomainError, ExistenceGateError, NumericalError,
                     OutOfRangeError, ValidationError)
from .kernels import BACKEND
from .funcatalog import catalog_f, catalog_weight
from .profile import phi_solve, h_solve, rate_predict, lemma_pro_verify, profile_table
from .bvp import ProblemSpec, solve_large, boundary_rate_fit, eigen_dirichlet

__all__ = [
    "__version__", "BACKEND", "BlowupLabError", "ConfigError", "DivergenceError", "DomainError",
    "ExistenceGateError", "NumericalError", "OutOfRangeError", "ValidationError", "catalog_f", "catalog_weight",
    "phi_solve", "h_solve", "rate_predict", "lemma_pro_verify", "profile_table", "ProblemSpec", "solve_large",
    "boundary_rate_fit", "eigen_dirichlet",
]
