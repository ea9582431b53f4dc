"""Fractional operator as a Fourier multiplier, and symbol-level spectra.

On the abelian model the Rockland operator is ``-Laplace`` (degree 2) with
symbol ``sigma(xi) = |xi|^2``; its powers act by ``sigma**a``.  The
nonabelian groups enter only through the spectra of their sub-Laplacian
symbols: the Heisenberg harmonic oscillator (closed form) and the Engel
quartic oscillator (Hermite-basis diagonalisation).

Time convention for a single mode ``i v' + beta2s v = f``:

    v(t) = exp(+i beta2s t) v0 - i int_0^t exp(+i beta2s (t - tau)) f(tau) dtau

All downstream estimates only use ``|v|``, so the sign of the phase does
not matter to them.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from fracschrod.fields import Field, Grid, lp_norm

log = logging.getLogger(__name__)


class FractionalOperator:
    """``R^s`` on a periodic grid, ``R = -Laplace`` of degree ``nu``.

    ``power_table`` overrides the precomputed ``sigma**s`` (used to switch off
    the free flight in tests).
    """

    def __init__(self, grid: Grid, s: float, nu: float = 2, power_table: np.ndarray | None = None):
        if not s > 0:
            raise ValueError(f"fractional power s must be positive, got {s}")
        self.grid = grid
        self.s = float(s)
        self.nu = float(nu)
        self.sigma = grid.wavenumber_squared
        self.sigma.setflags(write=False)
        table = self.sigma**self.s if power_table is None else np.asarray(power_table, dtype=float)
        if table.shape != grid.shape:
            raise ValueError("power table shape does not match grid")
        self.power_table = table
        self.power_table.setflags(write=False)

    def __repr__(self):
        return f"FractionalOperator(points={self.grid.points}, s={self.s}, nu={self.nu})"

    def multiplier(self, a: float) -> np.ndarray:
        """``sigma**a`` with the zero mode set to 0 when ``a < 0``."""
        if a == self.s:
            return self.power_table
        if a == 0:
            return np.ones(self.grid.shape)
        if a > 0:
            return self.sigma**a
        with np.errstate(divide="ignore"):
            m = np.where(self.sigma > 0, self.sigma, 1.0) ** a
        return np.where(self.sigma > 0, m, 0.0)

    def free_phase(self, dt: float) -> np.ndarray:
        """Exact free-flight factor ``exp(i sigma^s dt)`` per Fourier mode."""
        return np.exp(1j * self.power_table * dt)


def apply_power(op: FractionalOperator, f: Field, a: float) -> Field:
    """Multiply the spectrum of ``f`` by ``sigma**a``.

    For ``a < 0`` the zero mode is projected out and
    ``meta["zero_mode_projected"]`` is set.
    """
    if f.grid != op.grid:
        raise ValueError("field and operator live on different grids")
    out = Field.from_spectrum(op.grid, f.spectrum() * op.multiplier(a))
    if a < 0:
        out.meta["zero_mode_projected"] = True
    return out


def homogeneous_norm(op: FractionalOperator, f: Field, order: float, q: float = 2) -> float:
    """``|| R^{order/nu} f ||_{L^q}``."""
    if order == 0:
        return lp_norm(f, q)
    if q == 2:
        # Parseval avoids the inverse transform
        fhat = f.spectrum() * op.multiplier(order / op.nu)
        return math.sqrt(np.vdot(fhat, fhat).real / op.grid.box_volume)
    return lp_norm(apply_power(op, f, order / op.nu), q)


def sobolev_norm(op: FractionalOperator, f: Field, order: float) -> float:
    """``||R^{order/nu} f||_2 + ||f||_2`` (a sum, not a root-sum-square)."""
    if order < 0:
        raise ValueError("Sobolev order must be >= 0")
    return homogeneous_norm(op, f, order) + lp_norm(f, 2)


# ---------------------------------------------------------------------------
# symbol models


@dataclass
class SymbolModel:
    kind: str
    params: dict
    eigenvalues: np.ndarray
    basis_size: int | None = None
    converged: bool = True
    warnings: list[str] = field(default_factory=list)


def heisenberg_spectrum(n: int, lam: float, count: int) -> np.ndarray:
    """First ``count`` eigenvalues of ``-pi_lam(sub-Laplacian)`` on ``H_n``.

    Level ``m = |l|`` has eigenvalue ``|lam| (2m + n)`` with multiplicity
    ``C(m + n - 1, n - 1)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if lam == 0:
        raise ValueError("lambda must be nonzero (nontrivial representations only)")
    if count < 1:
        raise ValueError("count must be >= 1")
    out: list[float] = []
    m = 0
    while len(out) < count:
        mult = math.comb(m + n - 1, n - 1)
        out.extend([abs(lam) * (2 * m + n)] * mult)
        m += 1
    return np.array(out[:count], dtype=float)


def heisenberg_symbol(n: int, lam: float, count: int) -> SymbolModel:
    return SymbolModel("heisenberg", {"n": n, "lambda": lam}, heisenberg_spectrum(n, lam, count))


def _ladder(size: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, size)), k=1)


def hermite_galerkin_spectrum(poly: dict[int, float], basis_size: int, count: int,
                              scale: float | None = None) -> np.ndarray:
    """Lowest eigenvalues of ``-d^2/du^2 + sum_k poly[k] u^k`` in a Hermite basis.

    The basis functions are Hermite functions of width ``scale``.  Position
    and derivative act as tridiagonal ladder matrices; products are formed on
    an enlarged basis and then truncated, so every Galerkin entry of a
    polynomial potential is exact.
    """
    if count < 1 or basis_size < count:
        raise ValueError("need 1 <= count <= basis_size")
    deg = max((k for k, c in poly.items() if c != 0), default=0)
    if scale is None:
        c4 = poly.get(4, 0.0)
        c2 = poly.get(2, 0.0)
        scale = c4 ** (-1 / 6) if c4 > 0 else (c2 ** (-1 / 4) if c2 > 0 else 1.0)
    big = basis_size + max(deg, 2)
    a = _ladder(big)
    x = scale / math.sqrt(2) * (a + a.T)
    d = (a - a.T) / (math.sqrt(2) * scale)
    h = -(d @ d)
    xk = np.eye(big)
    for k in range(deg + 1):
        if k:
            xk = xk @ x
        c = poly.get(k, 0.0)
        if c:
            h = h + c * xk
    h = h[:basis_size, :basis_size]
    h = 0.5 * (h + h.T)
    return eigh(h, eigvals_only=True, subset_by_index=[0, count - 1])


def engel_potential(lam: float, mu: float) -> dict[int, float]:
    """``(1/4)(lam u^2 - mu/lam)^2`` as polynomial coefficients."""
    return {4: lam**2 / 4, 2: -mu / 2, 0: (mu / lam) ** 2 / 4}


def engel_symbol_spectrum(lam: float, mu: float, basis_size: int = 256, count: int = 5,
                          scale: float | None = None, rtol: float = 1e-6) -> SymbolModel:
    """Lowest eigenvalues of ``-A = -d^2/du^2 + (1/4)(lam u^2 - mu/lam)^2``.

    Converged means the ``basis_size`` and ``basis_size // 2`` runs agree to
    relative ``rtol`` on every returned eigenvalue.
    """
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    if basis_size < 4 * count:
        raise ValueError(f"basis_size must be >= 4*count ({4 * count}), got {basis_size}")
    poly = engel_potential(lam, mu)
    full = hermite_galerkin_spectrum(poly, basis_size, count, scale)
    half = hermite_galerkin_spectrum(poly, basis_size // 2, count, scale)
    change = float(np.max(np.abs(full - half) / np.abs(full)))
    model = SymbolModel("engel", {"lambda": lam, "mu": mu}, full, basis_size=basis_size,
                        converged=change < rtol)
    model.params["relative_change"] = change
    if not model.converged:
        msg = f"engel spectrum not converged: relative change {change:.3g} between {basis_size // 2} and {basis_size}"
        model.warnings.append(msg)
        log.warning(msg)
    return model


def spectrum_rows(values, rtol: float = 1e-12) -> list[tuple[int, float, int]]:
    """(index, eigenvalue, multiplicity) rows, one per distinct eigenvalue."""
    rows: list[tuple[int, float, int]] = []
    for v in values:
        v = float(v)
        if rows and abs(v - rows[-1][1]) <= rtol * max(1.0, abs(v)):
            i, val, m = rows[-1]
            rows[-1] = (i, val, m + 1)
        else:
            rows.append((len(rows), v, 1))
    return rows


def brute_force_heisenberg(n: int, lam: float, count: int) -> np.ndarray:
    """Enumerate multi-indices directly; independent check of :func:`heisenberg_spectrum`."""
    top = count  # |l| <= count certainly covers the first `count` values
    vals = [abs(lam) * (2 * sum(ell) + n) for ell in itertools.product(range(top + 1), repeat=n)]
    return np.sort(vals)[:count]


# ---------------------------------------------------------------------------
# single-mode Duhamel solver


def mode_duhamel_solve(beta2s: float, v0: complex, forcing, T: float | None = None):
    """Solve ``i v' + beta2s v = f`` with ``v(0) = v0`` on the forcing sample grid.

    ``forcing`` is a sequence of ``(t, f)`` samples on a uniform grid starting
    at 0.  On each subinterval the forcing is held at the mean of its two
    endpoint samples and the resulting linear ODE is integrated exactly.
    Returns ``(times, values)`` up to ``T`` (default: last sample).
    """
    samples = np.asarray(list(forcing), dtype=complex)
    if samples.size == 0:
        raise ValueError("empty forcing grid")
    samples = samples.reshape(-1, 2)
    t = samples[:, 0].real.astype(float)
    f = samples[:, 1]
    if T is None:
        T = float(t[-1])
    if abs(t[0]) > 1e-12 or t[-1] < T - 1e-12 * max(1.0, T):
        raise ValueError("forcing samples must cover [0, T]")
    if len(t) > 2:
        h = np.diff(t)
        if np.max(np.abs(h - h[0])) > 1e-9 * h[0]:
            raise ValueError("forcing samples must be uniform in time")
    keep = t <= T * (1 + 1e-12)
    tk = t[keep]
    fk = f[keep]
    times = tk
    if tk[-1] < T * (1 - 1e-12):
        # short closing interval, forcing linearly interpolated at T
        j = len(tk)
        fT = fk[-1] + (f[j] - fk[-1]) * (T - tk[-1]) / (t[j] - tk[-1])
        times = np.append(tk, T)
        fk = np.append(fk, fT)
    h = np.diff(times)
    fbar = 0.5 * (fk[1:] + fk[:-1])
    # kernel = -i h phi(i beta2s h), phi(z) = (e^z - 1)/z, series near 0 avoids 0/0 and overflow
    z = 1j * beta2s * h
    small = np.abs(z) < 1e-6
    phi = np.where(small, 1 + z / 2 + z * z / 6, np.expm1(z) / np.where(small, 1.0, z))
    kernel = -1j * h * phi
    # interaction picture w = exp(-i beta2s t) v
    incr = np.exp(-1j * beta2s * times[1:]) * kernel * fbar
    w = np.concatenate([[complex(v0)], complex(v0) + np.cumsum(incr)])
    return times, np.exp(1j * beta2s * times) * w
