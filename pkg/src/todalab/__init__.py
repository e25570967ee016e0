"""Explicit solutions of the SU(n+1) Toda system with singular sources,
and numerical checks of their residuals, masses, asymptotics and
linearized kernel."""
from .cartan import CartanData, build_cartan
from .errors import (
    BranchCutError,
    ConfigError,
    DomainError,
    InvalidSolutionError,
    TodaError,
    ValidationError,
)
from .solution import SolutionParams, TodaSolution, make_params, random_params, validate_params

__all__ = [
    "BranchCutError",
    "CartanData",
    "ConfigError",
    "DomainError",
    "InvalidSolutionError",
    "SolutionParams",
    "TodaError",
    "TodaSolution",
    "ValidationError",
    "build_cartan",
    "make_params",
    "random_params",
    "validate_params",
]
