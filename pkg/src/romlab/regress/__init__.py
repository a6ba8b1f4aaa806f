"""Closure regressors behind the :class:`ClosureModel` interface."""

from .base import ClosureModel, ZeroModel, load_model, save_model
from .expr import count_occurrences, parse, simplify, to_string
from .gp import SrConfig
from .linear import (QuadraticModel, RidgeModel, design_matrix, design_rank,
                     fit_quadratic_tsvd, fit_ridge)
from .mlp import ARCHITECTURES, MLPModel, NnConfig, fit_mlp
from .symbolic import SymbolicModel, fit_symbolic, load_symbolic, save_symbolic

__all__ = [
    "ClosureModel", "ZeroModel", "load_model", "save_model",
    "count_occurrences", "parse", "simplify", "to_string",
    "SrConfig", "SymbolicModel", "fit_symbolic", "load_symbolic", "save_symbolic",
    "QuadraticModel", "RidgeModel", "design_matrix", "design_rank",
    "fit_quadratic_tsvd", "fit_ridge",
    "ARCHITECTURES", "MLPModel", "NnConfig", "fit_mlp",
]
