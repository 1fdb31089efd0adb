"""Certify, solve and probe semilinear Dirichlet problems ``-Laplace u = f(x, u)``.

The discrete problem ``A u = N(u)`` has a unique solution when ``A`` is
coercive with constant ``alpha``, ``|N(u)| <= beta |Au| + delta`` with
``beta < 1`` and ``f_u <= gamma < alpha``. This package estimates those
constants, solves by Gauss-Newton on ``0.5 |A u - N(u) - y|^2`` and checks
uniqueness empirically from many starting points.
"""

from .certify import HypothesisCertificate, certify, certify_operator
from .config import ProblemConfig, load_config, parse_config
from .expr import differentiate_u, evaluate, parse
from .grid import GridDomain, GridField
from .laplacian import build_laplacian, embedding_constant, poincare_constant
from .nemytskii import Nonlinearity, apply_N, apply_Nprime, c1_remainder
from .operators import DiscreteOperator, apply, graph_norm, smallest_eigenvalue, solve_spd
from .probe import UniquenessReport, multistart
from .solve import SolveOptions, SolveReport, gauss_newton_solve, grad_phi, residual

__all__ = [
    "DiscreteOperator",
    "GridDomain",
    "GridField",
    "HypothesisCertificate",
    "Nonlinearity",
    "ProblemConfig",
    "SolveOptions",
    "SolveReport",
    "UniquenessReport",
    "apply",
    "apply_N",
    "apply_Nprime",
    "build_laplacian",
    "c1_remainder",
    "certify",
    "certify_operator",
    "differentiate_u",
    "embedding_constant",
    "evaluate",
    "gauss_newton_solve",
    "grad_phi",
    "graph_norm",
    "load_config",
    "multistart",
    "parse",
    "parse_config",
    "poincare_constant",
    "residual",
    "smallest_eigenvalue",
    "solve_spd",
]

__version__ = "0.1.0"
