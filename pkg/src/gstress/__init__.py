"""gstress: stress-energy tensors of immersions and their Gauss maps, checked numerically."""
from .catalog import ImmersionSpec, catalog_get, catalog_names, eval_immersion, parse_definition, resolve
from .errors import (
    CatalogError,
    ChartDomainError,
    ConfigError,
    DegenerateImmersionError,
    ExprSyntaxError,
    GStressError,
    OrderExhaustedError,
    SingularPointError,
)
from .expr import parse_expression
from .jets import Jet, jet_arith, jet_elementary, jet_partial, jet_variable
from .quadrature import integrate, make_grid, theorem1_integral_pair
from .report import emit_report
from .shape import point_geometry
from .suites import SuiteConfig, VerificationReport, __version__, run_suite

__all__ = [
    "CatalogError", "ChartDomainError", "ConfigError", "DegenerateImmersionError", "ExprSyntaxError",
    "GStressError", "ImmersionSpec", "Jet", "OrderExhaustedError", "SingularPointError", "SuiteConfig",
    "VerificationReport", "__version__", "catalog_get", "catalog_names", "emit_report", "eval_immersion",
    "integrate", "jet_arith", "jet_elementary", "jet_partial", "jet_variable", "make_grid", "parse_definition",
    "parse_expression", "point_geometry", "resolve", "run_suite", "theorem1_integral_pair",
]
