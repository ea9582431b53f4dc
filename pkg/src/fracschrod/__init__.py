"""Numerical laboratory for fractional Schrodinger equations with singular potentials.

Very weak solutions are realised as nets of regularised problems indexed by
``eps``; this package builds the nets, propagates them with a unitary
split-step scheme and measures how norms of the solutions scale as ``eps``
goes to zero.
"""

from fracschrod.errors import (
    ConfigError,
    NumericalBlowupError,
    PreconditionError,
    ResolutionError,
)
from fracschrod.group_geometry import GroupStructure, dilate, homogeneous_dimension
from fracschrod.fields import Field, Grid, inner, lp_norm
from fracschrod.spectral import (
    FractionalOperator,
    SymbolModel,
    apply_power,
    engel_symbol_spectrum,
    heisenberg_spectrum,
    mode_duhamel_solve,
    sobolev_norm,
)
from fracschrod.mollifier import (
    Mollifier,
    PotentialNet,
    moderateness_slope,
    realize_net,
    scaled_mollifier,
)
from fracschrod.reports import ScalingReport
from fracschrod.evolution import SolverConfig, Trajectory, reference_solution, solve, step

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NumericalBlowupError",
    "PreconditionError",
    "ResolutionError",
    "GroupStructure",
    "dilate",
    "homogeneous_dimension",
    "Field",
    "Grid",
    "inner",
    "lp_norm",
    "FractionalOperator",
    "SymbolModel",
    "apply_power",
    "engel_symbol_spectrum",
    "heisenberg_spectrum",
    "mode_duhamel_solve",
    "sobolev_norm",
    "Mollifier",
    "PotentialNet",
    "moderateness_slope",
    "realize_net",
    "scaled_mollifier",
    "ScalingReport",
    "SolverConfig",
    "Trajectory",
    "reference_solution",
    "solve",
    "step",
]
