"""Unitary split-step propagation of ``i u_t + R^s u + p u = 0``.

Rewriting the equation as ``u_t = i (R^s u + p u)``, the free flight
multiplies Fourier mode ``xi`` by ``exp(i sigma(xi)^s dt)`` and the potential
substep multiplies pointwise by ``exp(i p(x) dt)``.  Both are exact unitary
maps, so the discrete L^2 norm is conserved up to round-off regardless of
``dt``; the energy

    E(t) = ||R^{s/2} u||^2 + ||sqrt(p) u||^2

is conserved only up to the splitting error (second order for Strang,
first order for Lie).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from fracschrod.errors import NumericalBlowupError
from fracschrod.fields import Field, boundary_mass_fraction
from fracschrod.mollifier import PotentialNet, realize_net
from fracschrod.spectral import FractionalOperator

log = logging.getLogger(__name__)

SCHEMES = ("lie", "strang")


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    T: float
    scheme: str = "strang"
    record_every: int = 1
    wrap_mass_threshold: float = 1e-8
    store_states: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= self.dt:
            raise ValueError(f"T must be >= dt (T={self.T}, dt={self.dt})")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def step_sizes(self) -> list[float]:
        """Full steps plus one shorter closing step so the last time is exactly T."""
        n = int(math.floor(self.T / self.dt * (1 + 1e-12)))
        rem = self.T - n * self.dt
        sizes = [self.dt] * n
        if rem > 1e-12 * self.dt:
            sizes.append(rem)
        return sizes


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[Field]
    l2_series: np.ndarray
    energy_series: np.ndarray
    sobolev_series: np.ndarray
    wrap_series: np.ndarray
    potential: Field
    config: SolverConfig
    warnings: list[str] = field(default_factory=list)
    clamped: float = 0.0

    @property
    def final(self) -> Field:
        # with store_states=False only the initial and final states are kept
        return self.states[-1]

    def max_l2_deviation(self) -> float:
        """``max_t | ||u(t)|| - ||u0|| | / ||u0||``."""
        l0 = self.l2_series[0]
        return float(np.max(np.abs(self.l2_series - l0)) / l0)

    def energy_drift(self) -> float:
        """``max_t |E(t) - E(0)|`` (absolute)."""
        return float(np.max(np.abs(self.energy_series - self.energy_series[0])))

    def relative_energy_drift(self) -> float:
        e0 = self.energy_series[0]
        return self.energy_drift() / e0 if e0 else self.energy_drift()

    def sup_sobolev(self) -> float:
        return float(np.max(self.sobolev_series))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "l2", "energy", "sobolev", "wrap_mass"])
        for row in zip(self.times, self.l2_series, self.energy_series, self.sobolev_series, self.wrap_series):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _phases(p: np.ndarray, op: FractionalOperator, dt: float, scheme: str):
    free = op.free_phase(dt)
    pot = np.exp(1j * p * (dt / 2 if scheme == "strang" else dt))
    return pot, free


def _advance(v: np.ndarray, pot: np.ndarray, free: np.ndarray, scheme: str) -> np.ndarray:
    v = v * pot
    v = np.fft.ifftn(np.fft.fftn(v) * free)
    if scheme == "strang":
        v = v * pot
    return v


def _check_finite(v: np.ndarray, index: int):
    if not np.all(np.isfinite(v)):
        raise NumericalBlowupError(index)


def step(u: Field, p_eps: Field, op: FractionalOperator, dt: float, scheme: str = "strang",
         index: int = 0) -> Field:
    """One split step of length ``dt``.

    strang: ``exp(i p dt/2)``, free flight, ``exp(i p dt/2)``.
    lie: ``exp(i p dt)`` then free flight.
    """
    if u.grid != op.grid or p_eps.grid != op.grid:
        raise ValueError("state, potential and operator must share a grid")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    _check_finite(u.values, index)
    pot, free = _phases(p_eps.values.real, op, dt, scheme)
    v = _advance(u.values, pot, free, scheme)
    _check_finite(v, index)
    return Field(u.grid, v)


def diagnostics(u: np.ndarray, p: np.ndarray, op: FractionalOperator) -> tuple[float, float, float]:
    """``(||u||, E, ||u||_{H^{s nu/2}})`` for a state array and a clamped potential."""
    g = op.grid
    uhat = np.fft.fftn(u) * g.cell_volume
    dens_hat = np.abs(uhat) ** 2
    kinetic = float(np.sum(op.power_table * dens_hat) / g.box_volume)
    dens = np.abs(u) ** 2
    l2 = math.sqrt(g.cell_volume * float(dens.sum()))
    potential = g.cell_volume * float(np.sum(p * dens))
    return l2, kinetic + potential, math.sqrt(kinetic) + l2


def evolve(u0: Field, p: Field, op: FractionalOperator, cfg: SolverConfig) -> Trajectory:
    """Propagate ``u0`` under a fixed realised potential ``p``."""
    if u0.grid != op.grid or p.grid != op.grid:
        raise ValueError("initial state, potential and operator must share a grid")
    if not np.any(u0.values):
        raise ValueError("initial state is identically zero")
    pr = p.values.real
    clamped = float(-pr.min()) if pr.min() < 0 else 0.0
    if clamped:
        log.info("clamping negative potential values (max magnitude %.3g)", clamped)
        pr = np.clip(pr, 0.0, None)

    warnings: list[str] = []
    times, states, l2s, energies, sobs, wraps = [], [], [], [], [], []
    threshold_hit = False

    def record(t, v):
        nonlocal threshold_hit
        l2, en, sob = diagnostics(v, pr, op)
        wrap = boundary_mass_fraction(Field(op.grid, v))
        times.append(t)
        if cfg.store_states or not states:
            states.append(Field(op.grid, v.copy()))
        l2s.append(l2)
        energies.append(en)
        sobs.append(sob)
        wraps.append(wrap)
        if wrap > cfg.wrap_mass_threshold and not threshold_hit:
            threshold_hit = True
            warnings.append(f"boundary mass fraction {wrap:.3g} exceeds {cfg.wrap_mass_threshold:.3g} at t={t:.6g}")

    v = u0.values.copy()
    _check_finite(v, 0)
    record(0.0, v)
    sizes = cfg.step_sizes()
    pot, free = _phases(pr, op, cfg.dt, cfg.scheme)
    t = 0.0
    for i, h in enumerate(sizes, start=1):
        if h != cfg.dt:
            pot, free = _phases(pr, op, h, cfg.scheme)
        v = _advance(v, pot, free, cfg.scheme)
        _check_finite(v, i)
        t = cfg.T if i == len(sizes) else i * cfg.dt
        if i % cfg.record_every == 0 or i == len(sizes):
            record(t, v)

    if not cfg.store_states and len(times) > 1:
        states.append(Field(op.grid, v.copy()))
    for w in warnings:
        log.warning(w)
    return Trajectory(np.array(times), states, np.array(l2s), np.array(energies), np.array(sobs),
                      np.array(wraps), Field(op.grid, pr), cfg, warnings, clamped)


def solve(u0: Field, net: PotentialNet, eps: float, op: FractionalOperator, cfg: SolverConfig) -> Trajectory:
    """Solve the eps-regularised problem with ``p_eps`` realised from ``net``."""
    p = realize_net(net, eps, op.grid)
    traj = evolve(u0, p, op, cfg)
    traj.clamped = max(traj.clamped, p.meta.get("clamped", 0.0))
    return traj


def reference_solution(u0: Field, p: Field, op: FractionalOperator, cfg: SolverConfig) -> Trajectory:
    """Classical solution for a fixed potential, stepped at ``cfg.dt / 8``.

    Recording is rescaled so the reference is sampled at the same times as a
    run with ``cfg``.
    """
    fine = replace(cfg, dt=cfg.dt / 8, record_every=cfg.record_every * 8)
    return evolve(u0, p, op, fine)
