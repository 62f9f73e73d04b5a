"""Entanglement detection with mutually unbiased measurements, bases and
general SIC-POVMs."""
__version__ = "0.1.0"

from .linalg import DensityMatrix, partial_trace, partial_transpose, tensor_product
from .measurements import (
    GSICPOVM,
    MUBFamily,
    MUMFamily,
    InfeasibleParameterError,
    UnsupportedDimensionError,
    build_gsic,
    build_mubs,
    build_mums,
    validate_family,
)
from .bipartite import BIPARTITE, CriterionResult, DimensionMismatchError
from .multipartite import MULTIPARTITE
from .states import StateSpec, generate, ppt_check

__all__ = [
    "DensityMatrix", "partial_trace", "partial_transpose", "tensor_product",
    "GSICPOVM", "MUBFamily", "MUMFamily", "InfeasibleParameterError", "UnsupportedDimensionError",
    "build_gsic", "build_mubs", "build_mums", "validate_family",
    "BIPARTITE", "CriterionResult", "DimensionMismatchError", "MULTIPARTITE",
    "StateSpec", "generate", "ppt_check",
]
