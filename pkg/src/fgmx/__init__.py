"""Extended Farlie-Gumbel-Morgenstern copulas C(u,v) = uv + theta(max(u,v)) phi(u) phi(v)."""
from .copula import (CopulaSpec, ValidityReport, certify, cdf, conditional_cdf, decompose,
                     density_ac, endpoint_vstar, rectangle_mass, validate)
from .families import FamilyParams, make_k_copula, make_named
from .funcspace import Func1D, QuadratureConfig, from_expr
from .measures import measure_set, spearman_rho, upper_tail_dep

__all__ = [
    "CopulaSpec", "ValidityReport", "certify", "cdf", "conditional_cdf", "decompose",
    "density_ac", "endpoint_vstar", "rectangle_mass", "validate",
    "FamilyParams", "make_k_copula", "make_named",
    "Func1D", "QuadratureConfig", "from_expr",
    "measure_set", "spearman_rho", "upper_tail_dep",
]
__version__ = "0.1.0"
