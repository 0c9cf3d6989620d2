"""Closed-form Kraus series and fixed-depth circuits for Markovian open quantum systems."""
from .lindblad import (
    CaseClassification,
    LindbladSystem,
    UnsupportedSystemError,
    build_superoperators,
    classify,
    exact_evolve,
    exact_propagator,
    lindblad_rhs,
    rk4_evolve,
)
from .series import (
    KrausTerm,
    error_bound,
    evaluate_series,
    kraus_operator,
    kraus_terms,
    series_channel,
    truncation_order,
)

__version__ = "0.1.0"
