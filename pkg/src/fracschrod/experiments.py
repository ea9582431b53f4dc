"""Numerical experiments over nets of regularised problems, each returning a report with verdicts.

Each experiment runs one regularised problem per eps (independent jobs,
optionally on a thread pool) and summarises the per-eps numbers in a
:class:`ScalingReport`.  "sup over t" always means max over recorded times.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from fracschrod.errors import PreconditionError, ResolutionError
from fracschrod.evolution import SolverConfig, Trajectory, evolve, reference_solution
from fracschrod.fields import Field, Grid, convolve, lp_norm, random_field
from fracschrod.group_geometry import GroupStructure
from fracschrod.mollifier import Mollifier, PotentialNet, realize_net, scaled_mollifier
from fracschrod.reports import ScalingReport
from fracschrod.spectral import FractionalOperator, homogeneous_norm, sobolev_norm

log = logging.getLogger(__name__)

ROUNDOFF_FLOOR = 1e-12
PHASE_MATCH_TOL = 1e-10


@dataclass(frozen=True)
class EpsilonNet:
    """Geometric net ``eps_j = eps0 * ratio**j``, ``j = 0..count-1``."""

    eps0: float
    ratio: float
    count: int

    def __post_init__(self):
        if not 0 < self.eps0 <= 1:
            raise ValueError("epsilon must lie in (0,1]")
        if not 0 < self.ratio < 1:
            raise ValueError("epsilon ratio must lie in (0,1)")
        if self.count < 5:
            raise ValueError("epsilon.count >= 5")

    @property
    def values(self) -> list[float]:
        return [self.eps0 * self.ratio**j for j in range(self.count)]

    def to_dict(self) -> dict:
        return {"eps0": self.eps0, "ratio": self.ratio, "count": self.count}


def _as_list(eps) -> list[float]:
    return eps.values if isinstance(eps, EpsilonNet) else [float(e) for e in eps]


def regularize_initial(u0, eps: float, mollifier: Mollifier, grid: Grid) -> Field:
    """``u0 * psi_eps`` for a field, ``psi_eps`` for ``u0 == "delta"``."""
    if isinstance(u0, str):
        if u0 != "delta":
            raise ValueError(f"unknown singular initial datum {u0!r}")
        return scaled_mollifier(mollifier, eps, grid)
    return convolve(u0, scaled_mollifier(mollifier, eps, grid))


def _initial(u0, eps, net: PotentialNet, grid: Grid, regularize: bool) -> Field:
    if regularize or isinstance(u0, str):
        return regularize_initial(u0, eps, net.mollifier, grid)
    return u0


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _run_per_eps(fn, eps_list, workers):
    """Run ``fn(eps)`` for each eps; resolution failures are dropped and reported."""

    def guarded(e):
        try:
            return e, fn(e), None
        except ResolutionError as exc:
            return e, None, str(exc)

    out = _map(guarded, eps_list, workers)
    ok = [(e, r) for e, r, err in out if err is None]
    warnings = [err for _, _, err in out if err is not None]
    return ok, warnings


def _max_distance(a: Trajectory, b: Trajectory) -> np.ndarray:
    if len(a.times) != len(b.times) or np.max(np.abs(a.times - b.times)) > 1e-9:
        raise ValueError("trajectories are not recorded at the same times")
    return np.array([lp_norm(x - y, 2) for x, y in zip(a.states, b.states)])


def _config_echo(op: FractionalOperator, cfg: SolverConfig, **kw) -> dict:
    return {
        "grid": op.grid.to_dict(),
        "s": op.s,
        "nu": op.nu,
        "dt": cfg.dt,
        "T": cfg.T,
        "scheme": cfg.scheme,
        "record_every": cfg.record_every,
        **kw,
    }


# ---------------------------------------------------------------------------


def moderateness_experiment(u0, net: PotentialNet, eps, op: FractionalOperator, cfg: SolverConfig,
                            regularize: bool = True, workers: int = 1) -> ScalingReport:
    """``sup_t ||u_eps(t)||_{H^{s nu/2}}`` per eps and its log-log slope.

    Moderate means a finite slope with fit residual below 0.1; the implied
    exponent is ``N = -slope``.
    """
    eps_list = _as_list(eps)
    light = replace(cfg, store_states=False)

    def run(e):
        tr = evolve(_initial(u0, e, net, op.grid, regularize), realize_net(net, e, op.grid), op, light)
        return tr.sup_sobolev(), tr.warnings

    ok, warnings = _run_per_eps(run, eps_list, workers)
    for _, (_, w) in ok:
        warnings.extend(w)
    rep = ScalingReport.fitted(
        "moderateness", [e for e, _ in ok], [v for _, (v, _) in ok], warnings=warnings,
        config=_config_echo(op, cfg, net=net.describe(), eps=eps_list, regularize_initial=regularize),
    )
    moderate = len(ok) >= 2 and math.isfinite(rep.slope) and rep.residual < 0.1
    rep.verdict = {"pass": moderate, "moderate": moderate, "partial": len(ok) < len(eps_list)}
    return rep


def uniqueness_experiment(u0, net: PotentialNet, eps, op: FractionalOperator, cfg: SolverConfig,
                          perturb: str = "potential", g: Field | None = None, seed: int = 0,
                          kmax: int = 5, regularize: bool = True, workers: int = 1) -> ScalingReport:
    """Stability of the solution net under negligible perturbations.

    ``perturb="potential"``: compare ``p_eps`` with ``p_eps + exp(-1/eps)``.
    The difference is then a pure global phase, so
    ``||u - u~||(t) = 2 |sin(exp(-1/eps) t / 2)| ||u0_eps||`` is checked to
    1e-10 wherever it sits above the round-off floor.

    ``perturb="initial"``: compare ``u0_eps`` with ``u0_eps + eps**6 g``
    (``g`` a unit-norm field, seeded random if not given); by linearity and
    unitarity the difference stays ``eps**6 ||g||``.

    Superpolynomial decay is certified on the tested range only: with
    ``C_k`` anchored at the largest eps above the floor, every other value
    must satisfy ``d(eps) <= C_k eps**k`` for ``k = 1..kmax``.
    """
    eps_list = _as_list(eps)
    if perturb not in ("potential", "initial"):
        raise ValueError("perturb must be 'potential' or 'initial'")
    used_seed = None
    if perturb == "initial" and g is None:
        used_seed = seed
        g = random_field(op.grid, seed, bandwidth=4.0)
    if g is not None:
        g = g * (1.0 / lp_norm(g, 2))

    def run(e):
        start = _initial(u0, e, net, op.grid, regularize)
        p = realize_net(net, e, op.grid)
        a = evolve(start, p, op, cfg)
        if perturb == "potential":
            b = evolve(start, realize_net(PotentialNet.constant_shifted(net), e, op.grid), op, cfg)
            c = PotentialNet.shift(e)
            predicted = 2 * np.abs(np.sin(c * a.times / 2)) * lp_norm(start, 2)
        else:
            b = evolve(start + g * e**6, p, op, cfg)
            predicted = np.full(len(a.times), e**6 * lp_norm(g, 2))
        d = _max_distance(a, b)
        return d, predicted, lp_norm(start, 2)

    ok, warnings = _run_per_eps(run, eps_list, workers)
    values, mismatch, floor_limited = [], [], []
    for e, (d, predicted, norm0) in ok:
        values.append(float(d.max()))
        limited = predicted.max() < ROUNDOFF_FLOOR * norm0
        floor_limited.append(bool(limited))
        mismatch.append(0.0 if limited else float(np.max(np.abs(d - predicted))))
    used = [e for e, _ in ok]
    rep = ScalingReport.fitted(
        f"uniqueness[{perturb}]", used, values, warnings=warnings, seed=used_seed,
        config=_config_echo(op, cfg, net=net.describe(), eps=eps_list, perturb=perturb,
                            regularize_initial=regularize),
    )
    if perturb == "initial":
        tol = 1e-9
        bound_ok = all(v <= e**6 * (1 + tol) + ROUNDOFF_FLOOR for e, v in zip(used, values))
        match_ok = all(m <= max(PHASE_MATCH_TOL, tol * e**6) for e, m in zip(used, mismatch))
    else:
        bound_ok = True
        match_ok = all(m <= PHASE_MATCH_TOL for m in mismatch)
    active = [(e, v) for e, v, fl in zip(used, values, floor_limited) if not fl]
    ck = {}
    if active:
        e0, v0 = active[0]
        for k in range(1, kmax + 1):
            c = v0 / e0**k
            ck[k] = c
            if any(v > c * e**k * (1 + 1e-9) for e, v in active):
                bound_ok = False
    rep.extra = {
        "phase_mismatch": mismatch,
        "floor_limited": floor_limited,
        "C_k": {str(k): v for k, v in ck.items()},
        "certified_range": [min(e for e, _ in active), max(e for e, _ in active)] if active else [],
    }
    unique = bool(ok) and bound_ok and match_ok
    rep.verdict = {"pass": unique, "unique": unique, "phase_identity": match_ok, "bounds": bound_ok,
                   "partial": len(ok) < len(eps_list)}
    return rep


def consistency_experiment(u0: Field, p_classical: Field, eps, op: FractionalOperator, cfg: SolverConfig,
                           mollifier: Mollifier | None = None, regularize: bool = True,
                           workers: int = 1, threshold: float = 1e-3) -> ScalingReport:
    """``max_t ||u_eps - u||_{L^2}`` against a fine-step classical solution.

    Consistent means the errors decrease along the net and the last one is
    below ``threshold``.  The fitted order in eps is recorded, not asserted.
    """
    eps_list = _as_list(eps)
    if np.any(p_classical.values.real < 0):
        raise ValueError("classical potential must be nonnegative")
    mollifier = mollifier or Mollifier(GroupStructure.abelian(op.grid.dims))
    net = PotentialNet.mollified(Field(p_classical.grid, p_classical.values.real), mollifier)
    ref = reference_solution(u0, p_classical, op, cfg)

    def run(e):
        start = _initial(u0, e, net, op.grid, regularize)
        tr = evolve(start, realize_net(net, e, op.grid), op, cfg)
        return float(_max_distance(tr, ref).max())

    ok, warnings = _run_per_eps(run, eps_list, workers)
    used = [e for e, _ in ok]
    errs = [v for _, v in ok]
    rep = ScalingReport.fitted(
        "consistency", used, errs, warnings=warnings + ref.warnings,
        config=_config_echo(op, cfg, eps=eps_list, regularize_initial=regularize,
                            reference_dt=cfg.dt / 8),
    )
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    final_ok = bool(errs) and errs[-1] < threshold
    rep.extra = {"order": rep.slope, "first_ratio": errs[0] / errs[1] if len(errs) > 1 and errs[1] else None}
    rep.verdict = {"pass": decreasing and final_ok, "consistent": decreasing and final_ok,
                   "decreasing": decreasing, "final_below_threshold": final_ok,
                   "partial": len(ok) < len(eps_list)}
    return rep


def check_prop2_precondition(Q: float, nu: float, s: float):
    if not Q > nu * s:
        raise PreconditionError(f"prop2 requires Q > nu*s, got Q={Q:g}, nu*s={nu * s:g}")


def apriori_check(u0: Field, p: Field, op: FractionalOperator, cfg: SolverConfig, which: str = "prop1",
                  group: GroupStructure | None = None, c_max: float = 10.0) -> ScalingReport:
    """Ratio of ``sup_t ||u(t)||_{H^{s nu/2}}`` to the a-priori right-hand side with constant 1.

    prop1: ``(1 + ||p||_inf) ||u0||_H``.
    prop2: ``||u0||_H (1 + ||p||_{2Q/(nu s)}) (1 + ||p||_{Q/(nu s)})**0.5``, only for ``Q > nu s``.
    """
    group = group or GroupStructure.abelian(op.grid.dims)
    Q = float(group.homogeneous_dimension)
    if which not in ("prop1", "prop2"):
        raise ValueError("which must be 'prop1' or 'prop2'")
    if which == "prop2":
        check_prop2_precondition(Q, op.nu, op.s)
    order = op.s * op.nu / 2
    h0 = sobolev_norm(op, u0, order)
    tr = evolve(u0, p, op, cfg)
    lhs = tr.sup_sobolev()
    if which == "prop1":
        pinf = lp_norm(p, math.inf)
        rhs = (1 + pinf) * h0
        norms = {"p_inf": pinf}
    else:
        q1, q2 = 2 * Q / (op.nu * op.s), Q / (op.nu * op.s)
        n1, n2 = lp_norm(p, q1), lp_norm(p, q2)
        rhs = h0 * (1 + n1) * math.sqrt(1 + n2)
        norms = {f"p_L{q1:g}": n1, f"p_L{q2:g}": n2}
    ratio = lhs / rhs
    rep = ScalingReport(f"apriori[{which}]", [], [ratio], warnings=list(tr.warnings),
                        config=_config_echo(op, cfg, which=which, Q=Q, c_max=c_max))
    rep.extra = {"lhs": lhs, "rhs": rhs, "u0_H": h0, "ratio": ratio, **norms}
    rep.verdict = {"pass": math.isfinite(ratio) and ratio <= c_max, "bounded": ratio <= c_max}
    return rep


def embedding_exponent(a: float, b: float, qt0: float, Q: float) -> float:
    """``q0`` from ``b - a = Q (1/qt0 - 1/q0)``; must satisfy ``1 < qt0 < q0 < inf``."""
    inv = 1.0 / qt0 - (b - a) / Q
    if not inv > 0:
        raise ValueError(f"exponent relation gives 1/q0 = {inv:g}; q0 must be finite")
    q0 = 1.0 / inv
    if not 1 < qt0 < q0:
        raise ValueError(f"need 1 < qt0 < q0, got qt0={qt0:g}, q0={q0:g}")
    return q0


def single_mode_embedding_ratio(xi_squared: float, a: float, b: float, q0: float, qt0: float,
                                volume: float, nu: float = 2) -> float:
    """Closed form of ``||R^{a/nu} f||_{q0} / ||R^{b/nu} f||_{qt0}`` for ``f = exp(i xi.x)``."""
    return xi_squared ** ((a - b) / nu) * volume ** (1 / q0 - 1 / qt0)


def _embedding_ratio(op, f, a, b, q0, qt0):
    top = homogeneous_norm(op, f, a, q0)
    bottom = homogeneous_norm(op, f, b, qt0)
    return top / bottom if bottom > 0 else math.inf


def embedding_check(op: FractionalOperator, family: Sequence[Field | Callable], a: float, b: float,
                    q0: float | None = None, qt0: float = 2.0, group: GroupStructure | None = None,
                    refine: int = 2, max_drift: float = 0.1) -> ScalingReport:
    """Empirical constant of ``||f||_{L^{q0}_a} <= C ||f||_{L^{qt0}_b}``.

    Family members given as callables ``fn(*coords)`` are also sampled on a
    ``refine``-times finer grid; the verdict then requires the max ratio to
    drift by less than ``max_drift``.
    """
    group = group or GroupStructure.abelian(op.grid.dims)
    Q = float(group.homogeneous_dimension)
    derived = embedding_exponent(a, b, qt0, Q)
    if q0 is None:
        q0 = derived
    elif abs(q0 - derived) > 1e-12 * derived:
        raise ValueError(f"b - a = Q(1/qt0 - 1/q0) violated: q0={q0:g} but relation gives {derived:g}")
    fine_op = FractionalOperator(op.grid.refined(refine), op.s, op.nu) if refine > 1 else None
    ratios, fine_ratios = [], []
    for f in family:
        if callable(f):
            ratios.append(_embedding_ratio(op, op.grid.sample(f), a, b, q0, qt0))
            if fine_op is not None:
                fine_ratios.append(_embedding_ratio(fine_op, fine_op.grid.sample(f), a, b, q0, qt0))
        else:
            ratios.append(_embedding_ratio(op, f, a, b, q0, qt0))
    finite = all(math.isfinite(r) for r in ratios + fine_ratios)
    c = max(ratios)
    drift = None
    stable = True
    if fine_ratios:
        drift = abs(max(fine_ratios) - max(r for r, f in zip(ratios, family) if callable(f))) / c
        stable = drift < max_drift
    rep = ScalingReport("embedding", [], ratios,
                        config={"grid": op.grid.to_dict(), "a": a, "b": b, "q0": q0, "qt0": qt0, "Q": Q})
    rep.extra = {"q0": q0, "C": c, "refined_ratios": fine_ratios, "drift": drift}
    if not fine_ratios:
        rep.warnings.append("no callable family members: refinement stability not assessed")
    rep.verdict = {"pass": finite and stable, "finite": finite, "stable": stable}
    return rep
