"""Homogeneous group bookkeeping: dilation weights and homogeneous dimension.

Only three presets are supported: abelian ``R^d``, the Heisenberg group
``H_n`` and the Engel group ``B_4``.  Weights are kept as exact fractions;
floating point only enters when a dilation is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class GroupStructure:
    weights: tuple[Fraction, ...]
    operator_degree: Fraction
    preset_tag: str

    def __post_init__(self):
        weights = tuple(Fraction(w) for w in self.weights)
        if not weights:
            raise ValueError("a group needs at least one dilation weight")
        if any(w <= 0 for w in weights):
            raise ValueError(f"dilation weights must be positive, got {weights}")
        if Fraction(self.operator_degree) <= 0:
            raise ValueError("operator degree must be positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "operator_degree", Fraction(self.operator_degree))

    @property
    def topological_dimension(self) -> int:
        return len(self.weights)

    @property
    def homogeneous_dimension(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    @classmethod
    def abelian(cls, d: int) -> "GroupStructure":
        if d < 1:
            raise ValueError("abelian dimension must be >= 1")
        return cls((Fraction(1),) * d, Fraction(2), f"abelian:{d}")

    @classmethod
    def heisenberg(cls, n: int) -> "GroupStructure":
        if n < 1:
            raise ValueError("Heisenberg index n must be >= 1")
        return cls((Fraction(1),) * (2 * n) + (Fraction(2),), Fraction(2), f"heisenberg:{n}")

    @classmethod
    def engel(cls) -> "GroupStructure":
        return cls(tuple(Fraction(w) for w in (1, 1, 2, 3)), Fraction(2), "engel")

    @classmethod
    def from_preset(cls, name: str) -> "GroupStructure":
        """Parse ``"abelian:<d>"``, ``"heisenberg:<n>"`` or ``"engel"``."""
        kind, _, arg = name.strip().partition(":")
        kind = kind.lower()
        if kind == "engel" and not arg:
            return cls.engel()
        if kind in ("abelian", "heisenberg") and arg:
            try:
                k = int(arg)
            except ValueError:
                raise ValueError(f"bad preset argument in {name!r}") from None
            return cls.abelian(k) if kind == "abelian" else cls.heisenberg(k)
        raise ValueError(
            f"unknown group preset {name!r}; expected 'abelian:<d>', 'heisenberg:<n>' or 'engel'"
        )

    def float_weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])


def dilate(g: GroupStructure, x: Sequence[float], r: float) -> np.ndarray:
    """Anisotropic dilation: component i is scaled by ``r**weights[i]``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != g.topological_dimension:
        raise ValueError(
            f"coordinate has {x.shape[-1]} components, group has dimension "
            f"{g.topological_dimension}"
        )
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    if r == 1:
        return x.copy()
    return x * float(r) ** g.float_weights()


def homogeneous_dimension(g: GroupStructure) -> Fraction:
    return g.homogeneous_dimension
