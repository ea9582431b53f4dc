"""Periodic-box grids, complex fields and quadrature norms.

The box ``[-L/2, L/2)`` per axis stands in for the whole space.  Transform
normalisation is fixed here and nowhere else:

* forward:  ``fhat = cell_volume * fftn(values)``
* inverse:  ``values = ifftn(fhat) / cell_volume``

so that ``cell_volume * sum|f|**2 == sum|fhat|**2 / box_volume`` (discrete
Parseval with physical norms).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    extents: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        extents = tuple(float(L) for L in np.atleast_1d(self.extents))
        points = tuple(int(n) for n in np.atleast_1d(self.points))
        if len(extents) != len(points):
            raise ValueError("extents and points must have the same length")
        if any(L <= 0 for L in extents):
            raise ValueError("box extents must be positive")
        if any(n < 2 for n in points):
            raise ValueError("need at least 2 points per axis")
        for n in points:
            if n & (n - 1) or n < 8:
                log.debug("grid axis with %d points is not a power of two >= 8", n)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "points", points)

    @property
    def dims(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extents, self.points))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def box_volume(self) -> float:
        return math.prod(self.extents)

    @property
    def size(self) -> int:
        return math.prod(self.points)

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        # N even puts the origin exactly on index N//2
        return tuple(-L / 2 + h * np.arange(n) for L, h, n in zip(self.extents, self.spacing, self.points))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def frequency_axes(self) -> tuple[np.ndarray, ...]:
        """Angular frequencies ``2 pi k / L`` in FFT order, ``k in [-N/2, N/2)``."""
        return tuple(2 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(self.points, self.spacing))

    @cached_property
    def frequencies(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.frequency_axes, indexing="ij"))

    @cached_property
    def wavenumber_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.frequencies)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.extents, tuple(n * factor for n in self.points))

    def sample(self, fn: Callable[..., np.ndarray]) -> "Field":
        """Evaluate ``fn(*coords)`` on the grid."""
        return Field(self, np.asarray(fn(*self.coords), dtype=complex))

    def to_dict(self) -> dict:
        return {"extents": list(self.extents), "points": list(self.points)}


@dataclass
class Field:
    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            values = values.reshape(self.grid.shape)
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def constant(cls, grid: Grid, c: complex) -> "Field":
        return cls(grid, np.full(grid.shape, c, dtype=complex))

    @classmethod
    def from_spectrum(cls, grid: Grid, fhat: np.ndarray) -> "Field":
        return cls(grid, np.fft.ifftn(fhat) / grid.cell_volume)

    def spectrum(self) -> np.ndarray:
        return self.grid.cell_volume * np.fft.fftn(self.values)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), dict(self.meta))

    def _check(self, other: "Field"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * other)

    __rmul__ = __mul__

    @property
    def real(self) -> np.ndarray:
        return self.values.real


def lp_norm(f: Field, q: float) -> float:
    """Quadrature L^q norm; ``q = inf`` is the grid maximum."""
    if not q >= 1:
        raise ValueError(f"L^q norm needs q >= 1, got {q}")
    a = np.abs(f.values)
    if math.isinf(q):
        return float(a.max())
    if q == 2:
        return float(math.sqrt(f.grid.cell_volume * np.vdot(a, a).real))
    # scale out the max so large q does not overflow
    m = a.max()
    if m == 0:
        return 0.0
    return float(m * (f.grid.cell_volume * np.sum((a / m) ** q)) ** (1.0 / q))


def inner(f: Field, g: Field) -> complex:
    """``<f, g> = cell_volume * sum(f * conj(g))``."""
    if f.grid != g.grid:
        raise ValueError("inner product of fields on different grids")
    return complex(f.grid.cell_volume * np.vdot(g.values, f.values))


def spectral_l2_squared(f: Field) -> float:
    """Spectral side of Parseval: ``sum|fhat|**2 / box_volume``."""
    fhat = f.spectrum()
    return float(np.vdot(fhat, fhat).real / f.grid.box_volume)


def convolve(f: Field, kernel: Field) -> Field:
    """Circular convolution ``(f * kernel)(x) = sum_y f(y) kernel(x - y) dV``.

    ``kernel`` is sampled on the centred grid, so its origin is moved to
    index 0 before transforming.
    """
    f._check(kernel)
    khat = np.fft.fftn(np.fft.ifftshift(kernel.values))
    out = np.fft.ifftn(np.fft.fftn(f.values) * khat) * f.grid.cell_volume
    return Field(f.grid, out)


def boundary_mass_fraction(f: Field, layer: float = 1.0 / 16) -> float:
    """Fraction of L^2 mass within ``layer * N`` cells of any box face."""
    mask = np.zeros(f.grid.shape, dtype=bool)
    for axis, n in enumerate(f.grid.points):
        w = max(1, int(round(layer * n)))
        idx = [slice(None)] * f.grid.dims
        idx[axis] = slice(0, w)
        mask[tuple(idx)] = True
        idx[axis] = slice(n - w, n)
        mask[tuple(idx)] = True
    dens = np.abs(f.values) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    return float(dens[mask].sum() / total)


def field_to_csv(f: Field) -> str:
    """CSV text with one index column per axis plus ``re`` and ``im``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"i{k}" for k in range(f.grid.dims)] + ["re", "im"])
    for idx in np.ndindex(*f.grid.shape):
        v = f.values[idx]
        w.writerow(list(idx) + [repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def field_from_csv(text: str, grid: Grid) -> Field:
    rows = list(csv.reader(io.StringIO(text)))
    values = np.zeros(grid.shape, dtype=complex)
    d = grid.dims
    for row in rows[1:]:
        idx = tuple(int(c) for c in row[:d])
        values[idx] = complex(float(row[d]), float(row[d + 1]))
    return Field(grid, values)


def save_field_binary(f: Field, path: str | Path) -> tuple[Path, Path]:
    """Raw little-endian complex64 in C order, with a JSON grid sidecar."""
    path = Path(path)
    data = f.values.astype("<c8", copy=False)
    path.write_bytes(data.tobytes(order="C"))
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(
        json.dumps({**f.grid.to_dict(), "dtype": "complex64", "byteorder": "little", "order": "C"}, indent=2)
        + "\n"
    )
    return path, sidecar


def load_field_binary(path: str | Path) -> Field:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = Grid(tuple(meta["extents"]), tuple(meta["points"]))
    data = np.frombuffer(path.read_bytes(), dtype="<c8").reshape(grid.shape)
    return Field(grid, data.astype(complex))


def sample_gaussian(grid: Grid, center: Sequence[float] | None = None, width: float = 1.0,
                    k0: Sequence[float] | None = None) -> Field:
    """Gaussian wave packet ``exp(-|x-c|^2/(2 w^2) + i k0.x)`` (not normalised)."""
    center = np.zeros(grid.dims) if center is None else np.asarray(center, float)
    k0 = np.zeros(grid.dims) if k0 is None else np.asarray(k0, float)
    r2 = sum((x - c) ** 2 for x, c in zip(grid.coords, center))
    phase = sum(k * x for x, k in zip(grid.coords, k0))
    return Field(grid, np.exp(-r2 / (2 * width**2) + 1j * phase))


def random_field(grid: Grid, seed: int, bandwidth: float | None = None) -> Field:
    """Seeded smooth random field: complex Gaussian noise low-passed in Fourier space."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if bandwidth is not None:
        noise = np.fft.ifftn(np.fft.fftn(noise) * np.exp(-grid.wavenumber_squared / (2 * bandwidth**2)))
    return Field(grid, noise)
