"""Moments of the empirical correlation between two independent Wiener paths.

Closed-form and quadrature routes live in :mod:`specialfun`, :mod:`kernel`,
:mod:`quadrature` and :mod:`moments`; the simulation engine that checks them
is :mod:`montecarlo`.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    IllConditionedError,
    QuadratureError,
)
from .specialfun import MgfPoint, cpair, dF_dz, eval_F, eval_S, eval_T
from .quadrature import QuadratureSpec, generating_rhs, second_moment
from .moments import even_moment
from .montecarlo import SimConfig, estimate_moments, histogram, simulate
