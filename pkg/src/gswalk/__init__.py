"""Randomized rounding of fractional colorings with the Gram-Schmidt walk."""

__version__ = "0.1.0"

from .applications import (
    FactorizedMatrix,
    HullSystem,
    gamma2_color,
    komlos_color,
    lp_discrepancy,
    round_hull_system,
)
from .errors import InfeasibleError, InputError, NumericalError
from .preprocess import eliminate_dependencies
from .stats import analysis_diagnostics, certify, empirical_mgf, tail_test
from .walk import Instance, Trace, run_walk, sample_colorings, walk_rng

__all__ = [
    "FactorizedMatrix",
    "HullSystem",
    "InfeasibleError",
    "InputError",
    "Instance",
    "NumericalError",
    "Trace",
    "__version__",
    "analysis_diagnostics",
    "certify",
    "eliminate_dependencies",
    "empirical_mgf",
    "gamma2_color",
    "komlos_color",
    "lp_discrepancy",
    "round_hull_system",
    "run_walk",
    "sample_colorings",
    "tail_test",
    "walk_rng",
]
