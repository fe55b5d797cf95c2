"""Modified Riemann-Liouville fractional calculus and Lie symmetries of the
space-time fractional diffusion equation."""

from fraclie.canonical import CanonicalExpr, format_expr, parse_expr, to_canonical
from fraclie.errors import FracLieError
from fraclie.fraccalc import (
    FractionalOrder,
    SampledField,
    UniformGrid,
    mittag_leffler,
    mrl_derivative,
    power_rule_coeff,
    quadrature_oracle,
)
from fraclie.symmetry import TransformFamily, basis, bracket_table, transform_solution
from fraclie.verify import ResidualReport

__all__ = [
    "CanonicalExpr",
    "FracLieError",
    "FractionalOrder",
    "ResidualReport",
    "SampledField",
    "TransformFamily",
    "UniformGrid",
    "basis",
    "bracket_table",
    "format_expr",
    "mittag_leffler",
    "mrl_derivative",
    "parse_expr",
    "power_rule_coeff",
    "quadrature_oracle",
    "to_canonical",
    "transform_solution",
]

__version__ = "0.1.0"
