"""Friedrichs mollifiers under anisotropic dilations and regularising nets.

``psi_eps(x) = eps**(-Q) * psi(D_{1/eps} x)`` keeps unit mass for every
``eps`` because the Jacobian of ``D_{1/eps}`` is ``eps**(-Q)``.  Singular
potentials never exist as grid objects; a delta is only ever its net
``psi_eps``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from fracschrod.errors import ResolutionError
from fracschrod.fields import Field, Grid, convolve, lp_norm
from fracschrod.group_geometry import GroupStructure
from fracschrod.reports import ScalingReport

log = logging.getLogger(__name__)

MIN_CELLS_ACROSS = 8
GAUSS_SIGMA = 1.0 / 3.0


@dataclass(frozen=True)
class Mollifier:
    """Radial bump of support radius ``radius`` on the group's coordinates.

    ``profile="polynomial"``: ``c (1 - |x|^2/R^2)^power`` (default power 8).
    ``profile="gaussian_truncated"``: ``c (exp(-|x|^2/(2 s^2 R^2)) - exp(-1/(2 s^2)))_+``
    with ``s = 1/3``.
    """

    group: GroupStructure
    profile: str = "polynomial"
    power: int = 8
    radius: float = 1.0

    def __post_init__(self):
        if self.profile not in ("polynomial", "gaussian_truncated"):
            raise ValueError(f"unknown mollifier profile {self.profile!r}")
        if self.radius <= 0:
            raise ValueError("support radius must be positive")

    @property
    def dim(self) -> int:
        return self.group.topological_dimension

    def _shape(self, rho2: np.ndarray) -> np.ndarray:
        # rho2 = |x|^2 / R^2
        inside = rho2 < 1.0
        if self.profile == "polynomial":
            return np.where(inside, np.clip(1.0 - rho2, 0.0, None) ** self.power, 0.0)
        floor = math.exp(-1.0 / (2 * GAUSS_SIGMA**2))
        return np.where(inside, np.exp(-rho2 / (2 * GAUSS_SIGMA**2)) - floor, 0.0)

    @property
    def normalization(self) -> float:
        d, R = self.dim, self.radius
        if self.profile == "polynomial":
            k = self.power
            mass = R**d * math.pi ** (d / 2) * math.exp(special.gammaln(k + 1) - special.gammaln(k + 1 + d / 2))
        else:
            sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
            radial, _ = integrate.quad(lambda r: float(self._shape(np.array(r * r))) * r ** (d - 1), 0, 1,
                                       epsabs=1e-15, epsrel=1e-13)
            mass = sphere * R**d * radial
        return 1.0 / mass

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate ``psi`` at points ``x`` of shape ``(..., dim)``."""
        x = np.asarray(x, float)
        rho2 = np.sum(x**2, axis=-1) / self.radius**2
        return self.normalization * self._shape(rho2)

    @property
    def sup(self) -> float:
        return float(self.normalization * self._shape(np.array(0.0)))


def check_resolution(m: Mollifier, eps: float, grid: Grid):
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0,1], got {eps}")
    if grid.dims != m.dim:
        raise ValueError(f"grid has {grid.dims} axes, group has dimension {m.dim}")
    for i, (w, L, h) in enumerate(zip(m.group.float_weights(), grid.extents, grid.spacing)):
        half = m.radius * eps**w
        if half >= L / 2:
            raise ResolutionError(f"mollifier support {half:.3g} exceeds half box {L / 2:.3g} on axis {i}")
        cells = 2 * half / h
        if cells < MIN_CELLS_ACROSS:
            raise ResolutionError(
                f"eps={eps:.4g}: only {cells:.1f} cells across the support on axis {i} "
                f"(need {MIN_CELLS_ACROSS})"
            )


def scaled_mollifier(m: Mollifier, eps: float, grid: Grid) -> Field:
    """Sample ``eps**(-Q) psi(D_{1/eps} x)`` on ``grid``."""
    check_resolution(m, eps, grid)
    w = m.group.float_weights()
    Q = float(m.group.homogeneous_dimension)
    rho2 = sum((x * eps ** (-wi)) ** 2 for x, wi in zip(grid.coords, w)) / m.radius**2
    vals = eps ** (-Q) * m.normalization * m._shape(rho2)
    out = Field(grid, vals)
    out.meta["mass"] = float(grid.cell_volume * vals.sum())
    return out


def support_grid(group: GroupStructure, eps: float, points: int = 32, margin: float = 1.25,
                 radius: float = 1.0) -> Grid:
    """Box hugging the support of ``psi_eps``: side ``2 * margin * radius * eps**w_i``."""
    w = group.float_weights()
    return Grid(tuple(2 * margin * radius * eps**wi for wi in w), (points,) * len(w))


# ---------------------------------------------------------------------------
# potential nets

_REALIZERS: dict[str, Callable[["PotentialNet", float, Grid], np.ndarray]] = {}


def register_net_kind(name: str):
    """Register a realiser ``fn(net, eps, grid) -> real ndarray`` for a net kind."""

    def deco(fn):
        _REALIZERS[name] = fn
        return fn

    return deco


@dataclass(frozen=True)
class PotentialNet:
    kind: str
    mollifier: Mollifier
    base_field: Field | None = None
    base: "PotentialNet | None" = None

    @property
    def group(self) -> GroupStructure:
        return self.mollifier.group

    @classmethod
    def delta(cls, m: Mollifier) -> "PotentialNet":
        return cls("delta", m)

    @classmethod
    def delta_squared(cls, m: Mollifier) -> "PotentialNet":
        return cls("delta_squared", m)

    @classmethod
    def mollified(cls, p: Field, m: Mollifier) -> "PotentialNet":
        if np.any(p.values.real < 0) or np.any(np.abs(p.values.imag) > 0):
            raise ValueError("potential to mollify must be real and nonnegative")
        return cls("mollified", m, base_field=p)

    @classmethod
    def zero(cls, grid: Grid, m: Mollifier) -> "PotentialNet":
        return cls.mollified(Field.zeros(grid), m)

    @classmethod
    def constant_shifted(cls, base: "PotentialNet") -> "PotentialNet":
        return cls("constant_shifted", base.mollifier, base=base)

    @staticmethod
    def shift(eps: float) -> float:
        return math.exp(-1.0 / eps)

    def describe(self) -> str:
        if self.kind == "constant_shifted":
            return f"constant_shifted({self.base.describe()})"
        return self.kind


@register_net_kind("delta")
def _realize_delta(net, eps, grid):
    return scaled_mollifier(net.mollifier, eps, grid).values.real


@register_net_kind("delta_squared")
def _realize_delta_squared(net, eps, grid):
    return scaled_mollifier(net.mollifier, eps, grid).values.real ** 2


@register_net_kind("mollified")
def _realize_mollified(net, eps, grid):
    p = net.base_field
    if p.grid != grid:
        raise ValueError("mollified potential lives on a different grid")
    if not np.any(p.values):
        check_resolution(net.mollifier, eps, grid)
        return np.zeros(grid.shape)
    return convolve(p, scaled_mollifier(net.mollifier, eps, grid)).values.real


@register_net_kind("constant_shifted")
def _realize_shifted(net, eps, grid):
    return realize_net(net.base, eps, grid).values.real + PotentialNet.shift(eps)


def realize_net(net: PotentialNet, eps: float, grid: Grid) -> Field:
    """Sample ``p_eps`` on ``grid``; round-off negatives are clamped to 0."""
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0,1], got {eps}")
    try:
        fn = _REALIZERS[net.kind]
    except KeyError:
        raise ValueError(f"no realiser registered for net kind {net.kind!r}") from None
    vals = np.asarray(fn(net, eps, grid), dtype=float)
    neg = float(-vals.min()) if vals.min() < 0 else 0.0
    if neg:
        log.debug("clamped negative potential values of magnitude %.3g", neg)
        vals = np.clip(vals, 0.0, None)
    out = Field(grid, vals)
    out.meta["clamped"] = neg
    out.meta["eps"] = eps
    return out


def _norm_of(f: Field, norm) -> float:
    if norm in ("sup", "inf", math.inf):
        return lp_norm(f, math.inf)
    return lp_norm(f, float(norm))


def moderateness_slope(net: PotentialNet, norm, eps_list: Sequence[float],
                       grid: Grid | Callable[[float], Grid]) -> ScalingReport:
    """Fit ``log ||p_eps|| ~ slope * log eps`` over ``eps_list``.

    ``grid`` may be a fixed grid or a factory ``eps -> Grid``.  Values of
    eps that the grid cannot resolve are dropped with a warning and the fit
    uses what remains.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 5:
        raise ValueError("need at least 5 eps values")
    ratios = np.array(eps_list[1:]) / np.array(eps_list[:-1])
    if np.any(ratios >= 1) or np.ptp(ratios) > 1e-9 * ratios.mean():
        raise ValueError("eps_list must be geometric and strictly decreasing")
    used, vals, warnings = [], [], []
    for e in eps_list:
        g = grid(e) if callable(grid) else grid
        try:
            vals.append(_norm_of(realize_net(net, e, g), norm))
            used.append(e)
        except ResolutionError as exc:
            warnings.append(str(exc))
    rep = ScalingReport.fitted(f"moderateness_slope[{net.describe()}]", used, vals, warnings=warnings,
                               config={"norm": str(norm), "eps": eps_list})
    rep.verdict = {"pass": len(used) >= 2 and math.isfinite(rep.slope), "partial": bool(warnings)}
    return rep
