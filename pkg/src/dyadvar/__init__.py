"""Dyadic averages, their ell^s variation operator and a seeded verification harness."""

__version__ = "0.1.0"

from .errors import ArgumentError, PreconditionError, TruncationError
from .functions import (
    PiecewiseConstantFn,
    SampleGrid,
    dilate_dyadic,
    dyadic_average,
    integrate,
    translate,
)
from .variation import (
    DifferenceSequence,
    TruncationWindow,
    VariationParams,
    difference_sequence,
    lp_norm,
    variation,
    variation_on_grid,
    vector_variation,
)

__all__ = [
    "__version__",
    "ArgumentError",
    "PreconditionError",
    "TruncationError",
    "PiecewiseConstantFn",
    "SampleGrid",
    "dilate_dyadic",
    "dyadic_average",
    "integrate",
    "translate",
    "DifferenceSequence",
    "TruncationWindow",
    "VariationParams",
    "difference_sequence",
    "lp_norm",
    "variation",
    "variation_on_grid",
    "vector_variation",
]
