"""Quantum periods of Fano manifolds from Laurent polynomial mirrors, and
numerical checks of where the terms of their power series concentrate."""

__version__ = "0.1.0"

from .concentration import ConcentrationConfig, ConcentrationEstimator, ConcentrationReport, measure
from .conifold import ConifoldResult, find_conifold, step_distribution
from .exceptions import (
    ConvergenceError,
    DegenerateWindowError,
    DomainValidationError,
    ModelFormatError,
    NotConvenientError,
    QPeriodsError,
)
from .hypergeom import HypergeomSpec, Modifier, evaluate_and_measure, predict_peak
from .laurent import LaurentPolynomial, constant_term_of_power, cst_sequence, detect_index, load_model
from .location import LocationPolynomial
from .series import PeriodSequence, estimate_t_a_con, evaluate, quantum_period
from .walk import LcltEstimator, fit_lclt, monte_carlo_return, reduce_to_index_one

__all__ = [
    "ConcentrationConfig",
    "ConcentrationEstimator",
    "ConcentrationReport",
    "ConifoldResult",
    "ConvergenceError",
    "DegenerateWindowError",
    "DomainValidationError",
    "HypergeomSpec",
    "LaurentPolynomial",
    "LcltEstimator",
    "LocationPolynomial",
    "ModelFormatError",
    "Modifier",
    "NotConvenientError",
    "PeriodSequence",
    "QPeriodsError",
    "constant_term_of_power",
    "cst_sequence",
    "detect_index",
    "estimate_t_a_con",
    "evaluate",
    "evaluate_and_measure",
    "find_conifold",
    "fit_lclt",
    "load_model",
    "measure",
    "monte_carlo_return",
    "predict_peak",
    "quantum_period",
    "reduce_to_index_one",
    "step_distribution",
]
