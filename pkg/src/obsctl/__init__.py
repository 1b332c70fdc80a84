"""Penalized optimal control of the obstacle problem with global-optimality certificates."""

from .certificate import Certificate, Verdict, certify, threshold
from .linalg import (DimensionMismatchError, IllConditionedError, NoConvergenceError,
                     SingularMatrixError)
from .mesh import Domain, Mesh, build_uniform_mesh
from .penalized import KktSolution, gamma_homotopy, solve_kkt, solve_state
from .problems import ProblemData, example, from_functions, reference_lambda1

__all__ = [
    "Certificate", "Verdict", "certify", "threshold",
    "DimensionMismatchError", "IllConditionedError", "NoConvergenceError", "SingularMatrixError",
    "Domain", "Mesh", "build_uniform_mesh",
    "KktSolution", "gamma_homotopy", "solve_kkt", "solve_state",
    "ProblemData", "example", "from_functions", "reference_lambda1",
]
