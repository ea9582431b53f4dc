"""Command-line front end: JSON configs in, CSV/JSON artifacts plus a manifest out.

Exit codes: 0 every verdict passed, 1 some verdict failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from fracschrod import __version__
from fracschrod.errors import ConfigError, NumericalBlowupError, PreconditionError, ResolutionError
from fracschrod.evolution import SolverConfig, solve
from fracschrod.experiments import (
    EpsilonNet,
    apriori_check,
    check_prop2_precondition,
    consistency_experiment,
    embedding_check,
    moderateness_experiment,
    single_mode_embedding_ratio,
    uniqueness_experiment,
)
from fracschrod.fields import Field, Grid, random_field, sample_gaussian, save_field_binary
from fracschrod.group_geometry import GroupStructure
from fracschrod.mollifier import Mollifier, PotentialNet, moderateness_slope, support_grid
from fracschrod.reports import ScalingReport
from fracschrod.spectral import (
    FractionalOperator,
    engel_symbol_spectrum,
    heisenberg_spectrum,
    spectrum_rows,
)

log = logging.getLogger("fracschrod")

OUTPUT_ENV = "FRACSCHROD_OUT"
SUBCOMMANDS = ("solve", "moderateness", "uniqueness", "consistency", "apriori", "embedding",
               "spectrum", "mollifier-scaling")
POTENTIALS = ("delta", "delta_squared", "zero", "well")

SECTION_DEFAULTS = {
    "mollifier": {"profile": "polynomial", "power": 8, "radius": 1.0},
    "initial": {"kind": "gaussian", "center": None, "width": 1.0, "k0": None, "bandwidth": 4.0},
    "well": {"amplitude": 5.0, "radius": 2.0},
    "epsilon": {"eps0": 0.4, "ratio": 0.7, "count": 6},
    "experiment": {"which": "prop1", "c_max": 10.0, "perturb": "potential", "regularize_initial": True,
                   "a": 0.0, "b": 0.25, "qt0": 2.0, "widths": [0.5, 1.0, 2.0], "modes": [1, 3]},
    "spectrum": {"lambda": 1.0, "mu": 0.0, "count": 10, "basis_size": 256},
}


@dataclass
class RunConfig:
    group: str = "abelian:1"
    points: list = field(default_factory=lambda: [1024])
    extents: list = field(default_factory=lambda: [10.0])
    s: float = 1.0
    nu: float = 2.0
    potential: str = "delta"
    eps: float = 0.1
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "strang"
    record_every: int = 1
    wrap_mass_threshold: float = 1e-8
    output: str = "out"
    seed: int = 0
    workers: int = 1
    mollifier: dict = field(default_factory=lambda: copy.deepcopy(SECTION_DEFAULTS["mollifier"]))
    initial: dict = field(default_factory=lambda: copy.deepcopy(SECTION_DEFAULTS["initial"]))
    well: dict = field(default_factory=lambda: copy.deepcopy(SECTION_DEFAULTS["well"]))
    epsilon: dict = field(default_factory=lambda: copy.deepcopy(SECTION_DEFAULTS["epsilon"]))
    experiment: dict = field(default_factory=lambda: copy.deepcopy(SECTION_DEFAULTS["experiment"]))
    spectrum: dict = field(default_factory=lambda: copy.deepcopy(SECTION_DEFAULTS["spectrum"]))

    # -- derived objects

    @property
    def group_structure(self) -> GroupStructure:
        return GroupStructure.from_preset(self.group)

    def grid(self) -> Grid:
        return Grid(tuple(self.extents), tuple(self.points))

    def operator(self) -> FractionalOperator:
        return FractionalOperator(self.grid(), self.s, self.nu)

    def solver(self) -> SolverConfig:
        return SolverConfig(self.dt, self.T, self.scheme, self.record_every, self.wrap_mass_threshold)

    def epsilon_net(self) -> EpsilonNet:
        e = self.epsilon
        return EpsilonNet(float(e["eps0"]), float(e["ratio"]), int(e["count"]))

    def make_mollifier(self) -> Mollifier:
        m = self.mollifier
        return Mollifier(self.group_structure, m["profile"], int(m["power"]), float(m["radius"]))

    def well_field(self, grid: Grid | None = None) -> Field:
        """Smooth compactly supported bump ``A exp(1 - 1/(1 - |x|^2/R^2))``."""
        grid = grid or self.grid()
        A, R = float(self.well["amplitude"]), float(self.well["radius"])
        return grid.sample(lambda *xs: smooth_well(sum(x**2 for x in xs), A, R))

    def net(self) -> PotentialNet:
        m = self.make_mollifier()
        if self.potential == "delta":
            return PotentialNet.delta(m)
        if self.potential == "delta_squared":
            return PotentialNet.delta_squared(m)
        if self.potential == "zero":
            return PotentialNet.zero(self.grid(), m)
        return PotentialNet.mollified(self.well_field(), m)

    def initial_field(self):
        ini, grid = self.initial, self.grid()
        if ini["kind"] == "delta":
            return "delta"
        if ini["kind"] == "random":
            return random_field(grid, self.seed, float(ini["bandwidth"]))
        return sample_gaussian(grid, ini["center"], float(ini["width"]), ini["k0"])


def smooth_well(r2: np.ndarray, amplitude: float, radius: float) -> np.ndarray:
    y = 1.0 - r2 / radius**2
    inside = y > 0
    return np.where(inside, amplitude * np.exp(1.0 - 1.0 / np.where(inside, y, 1.0)), 0.0)


def _fail(msg: str):
    raise ConfigError(msg)


def _merge_section(name: str, given) -> dict:
    if not isinstance(given, dict):
        _fail(f"{name} must be an object")
    defaults = SECTION_DEFAULTS[name]
    for k in given:
        if k not in defaults:
            _fail(f"unknown key '{name}.{k}'")
    out = copy.deepcopy(defaults)
    out.update(given)
    return out


def validate(c: RunConfig) -> RunConfig:
    try:
        g = c.group_structure
    except ValueError as exc:
        _fail(f"group: {exc}")
    if len(c.points) != len(c.extents):
        _fail("points and extents must have the same length")
    if any(int(n) < 2 for n in c.points) or any(float(L) <= 0 for L in c.extents):
        _fail("points must be >= 2 and extents positive")
    if not c.s > 0:
        _fail("s must be > 0")
    if not c.nu > 0:
        _fail("nu must be > 0")
    if c.potential not in POTENTIALS:
        _fail(f"potential must be one of {POTENTIALS}, got {c.potential!r}")
    if not 0 < c.eps <= 1:
        _fail("epsilon must lie in (0,1]")
    if not c.dt > 0:
        _fail("dt must be > 0")
    if not c.T >= c.dt:
        _fail("T must be >= dt")
    if c.scheme not in ("strang", "lie"):
        _fail("scheme must be 'strang' or 'lie'")
    if c.record_every < 1:
        _fail("record_every >= 1")
    e = c.epsilon
    if not 0 < float(e["eps0"]) <= 1:
        _fail("epsilon must lie in (0,1]")
    if not 0 < float(e["ratio"]) < 1:
        _fail("epsilon.ratio must lie in (0,1)")
    if int(e["count"]) < 5:
        _fail("epsilon.count >= 5")
    if c.mollifier["profile"] not in ("polynomial", "gaussian_truncated"):
        _fail("mollifier.profile must be 'polynomial' or 'gaussian_truncated'")
    if c.initial["kind"] not in ("gaussian", "delta", "random"):
        _fail("initial.kind must be 'gaussian', 'delta' or 'random'")
    ex = c.experiment
    if ex["which"] not in ("prop1", "prop2"):
        _fail("experiment.which must be 'prop1' or 'prop2'")
    if ex["perturb"] not in ("potential", "initial"):
        _fail("experiment.perturb must be 'potential' or 'initial'")
    if ex["which"] == "prop2":
        try:
            check_prop2_precondition(float(g.homogeneous_dimension), c.nu, c.s)
        except PreconditionError as exc:
            _fail(f"{exc} (precondition Q > nu*s)")
    return c


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config; defaults are filled in."""
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        _fail("config must be a JSON object")
    known = {f.name: f for f in fields(RunConfig)}
    kwargs = {}
    for k, v in raw.items():
        if k not in known:
            _fail(f"unknown key '{k}'")
        if k in SECTION_DEFAULTS:
            v = _merge_section(k, v)
        elif k in ("points", "extents"):
            if not isinstance(v, list):
                _fail(f"{k} must be a list")
            v = [int(x) for x in v] if k == "points" else [float(x) for x in v]
        elif k in ("record_every", "seed", "workers"):
            if not isinstance(v, int) or isinstance(v, bool):
                _fail(f"{k} must be an integer")
        elif k in ("group", "potential", "scheme", "output"):
            if not isinstance(v, str):
                _fail(f"{k} must be a string")
        else:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                _fail(f"{k} must be a number")
            v = float(v)
        kwargs[k] = v
    return validate(RunConfig(**kwargs))


def serialize_config(c: RunConfig) -> str:
    return json.dumps(asdict(c), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# artifacts


class ArtifactWriter:
    """Single writer per run directory; records checksums for the manifest."""

    def __init__(self, out: Path):
        self.out = out
        self.out.mkdir(parents=True, exist_ok=True)
        self.checksums: dict[str, str] = {}

    def text(self, name: str, body: str) -> Path:
        path = self.out / name
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(body)
        self.checksums[name] = hashlib.sha256(body.encode()).hexdigest()
        return path

    def binary_field(self, name: str, f: Field):
        path, sidecar = save_field_binary(f, self.out / name)
        for p in (path, sidecar):
            self.checksums[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()

    def report(self, stem: str, rep: ScalingReport):
        self.text(f"{stem}.json", rep.to_json())
        self.text(f"{stem}.csv", rep.to_csv())

    def manifest(self, subcommand: str, config: RunConfig, verdicts: dict):
        body = {
            "subcommand": subcommand,
            "config": asdict(config),
            "verdicts": verdicts,
            "artifacts": dict(sorted(self.checksums.items())),
            "versions": {"fracschrod": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
        }
        self.text("manifest.json", json.dumps(body, indent=2, sort_keys=True) + "\n")
        # timestamps live outside the checksummed artifacts
        (self.out / "run_info.json").write_text(json.dumps({"finished": time.time()}) + "\n")


def _require_abelian(c: RunConfig):
    g = c.group_structure
    if not g.preset_tag.startswith("abelian"):
        _fail(f"{g.preset_tag}: grid evolution is only available on abelian groups")
    if g.topological_dimension != len(c.points):
        _fail(f"group {c.group} needs {g.topological_dimension} grid axes, got {len(c.points)}")


def _cmd_solve(c, w, args):
    _require_abelian(c)
    op, cfg = c.operator(), c.solver()
    u0 = c.initial_field()
    net = c.net()
    if isinstance(u0, str):
        from fracschrod.experiments import regularize_initial

        u0 = regularize_initial(u0, c.eps, net.mollifier, op.grid)
    tr = solve(u0, net, c.eps, op, cfg)
    w.text("diagnostics.csv", tr.to_csv())
    w.binary_field("final_state.c64", tr.final)
    dev = tr.max_l2_deviation()
    ok = dev <= 1e-11
    line = (f"solve: {'PASS' if ok else 'FAIL'} l2_deviation={dev:.3g} "
            f"energy_drift={tr.relative_energy_drift():.3g}")
    return {"solve": ok}, [line]


def _cmd_moderateness(c, w, args):
    _require_abelian(c)
    rep = moderateness_experiment(c.initial_field(), c.net(), c.epsilon_net(), c.operator(), c.solver(),
                                  regularize=bool(c.experiment["regularize_initial"]), workers=c.workers)
    w.report("moderateness", rep)
    return {"moderateness": rep.passed}, [rep.summary_line()]


def _cmd_uniqueness(c, w, args):
    _require_abelian(c)
    rep = uniqueness_experiment(c.initial_field(), c.net(), c.epsilon_net(), c.operator(), c.solver(),
                                perturb=c.experiment["perturb"], seed=c.seed,
                                regularize=bool(c.experiment["regularize_initial"]), workers=c.workers)
    w.report("uniqueness", rep)
    return {"uniqueness": rep.passed}, [rep.summary_line()]


def _cmd_consistency(c, w, args):
    _require_abelian(c)
    u0 = c.initial_field()
    if isinstance(u0, str):
        _fail("consistency needs a classical initial datum")
    rep = consistency_experiment(u0, c.well_field(), c.epsilon_net(), c.operator(), c.solver(),
                                 mollifier=c.make_mollifier(),
                                 regularize=bool(c.experiment["regularize_initial"]), workers=c.workers)
    w.report("consistency", rep)
    return {"consistency": rep.passed}, [rep.summary_line() + f" order={rep.extra['order']:.3g}"]


def _cmd_apriori(c, w, args):
    _require_abelian(c)
    u0 = c.initial_field()
    if isinstance(u0, str):
        _fail("a-priori checks need a classical initial datum")
    p = c.well_field() if c.potential == "well" else Field.zeros(c.grid())
    rep = apriori_check(u0, p, c.operator(), c.solver(), c.experiment["which"], c.group_structure,
                        float(c.experiment["c_max"]))
    w.report("apriori", rep)
    return {"apriori": rep.passed}, [f"{rep.experiment}: {'PASS' if rep.passed else 'FAIL'} "
                                     f"ratio={rep.extra['ratio']:.4g}"]


def _cmd_embedding(c, w, args):
    _require_abelian(c)
    op = c.operator()
    ex = c.experiment
    a, b, qt0 = float(ex["a"]), float(ex["b"]), float(ex["qt0"])
    family = [(lambda wd: (lambda *xs: np.exp(-sum(x**2 for x in xs) / (2 * wd**2))))(float(wd))
              for wd in ex["widths"]]
    rep = embedding_check(op, family, a, b, None, qt0, c.group_structure)
    w.report("embedding", rep)
    lines = [f"embedding[gaussians]: {'PASS' if rep.passed else 'FAIL'} C={rep.extra['C']:.4g} "
             f"drift={rep.extra['drift']:.3g} q0={rep.extra['q0']:.4g}"]
    verdicts = {"embedding_gaussians": rep.passed}
    grid = op.grid
    modes = []
    for k in ex["modes"]:
        xi = 2 * math.pi * int(k) / grid.extents[0]
        modes.append(grid.sample(lambda *xs, xi=xi: np.exp(1j * xi * xs[0])))
    mrep = embedding_check(op, modes, a, b, None, qt0, c.group_structure)
    closed = [single_mode_embedding_ratio((2 * math.pi * int(k) / grid.extents[0]) ** 2, a, b,
                                          mrep.extra["q0"], qt0, grid.box_volume, op.nu) for k in ex["modes"]]
    err = max(abs(r - cf) / cf for r, cf in zip(mrep.values, closed))
    mrep.extra["closed_form"] = closed
    mrep.extra["relative_error"] = err
    mrep.verdict["closed_form"] = err <= 1e-8
    mrep.verdict["pass"] = mrep.verdict["finite"] and err <= 1e-8
    w.report("embedding_modes", mrep)
    verdicts["embedding_modes"] = mrep.passed
    lines.append(f"embedding[modes]: {'PASS' if mrep.passed else 'FAIL'} closed_form_error={err:.3g}")
    return verdicts, lines


def _cmd_spectrum(c, w, args):
    preset = args.preset or c.group
    g = GroupStructure.from_preset(preset)
    sp = c.spectrum
    count = args.count or int(sp["count"])
    lam = float(sp["lambda"])
    if g.preset_tag.startswith("heisenberg"):
        n = (g.topological_dimension - 1) // 2
        values = heisenberg_spectrum(n, lam, count)
        ok = True
        warn = []
    elif g.preset_tag == "engel":
        model = engel_symbol_spectrum(lam, float(sp["mu"]), int(sp["basis_size"]), count)
        values, ok, warn = model.eigenvalues, model.converged, model.warnings
    else:
        _fail("spectrum needs a heisenberg:<n> or engel preset")
    body = "index,eigenvalue,multiplicity\n" + "".join(
        f"{i},{v!r},{m}\n" for i, v, m in spectrum_rows(values))
    w.text("spectrum.csv", body)
    w.text("spectrum_values.csv", "index,eigenvalue\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(values)))
    line = f"spectrum[{g.preset_tag}]: {'PASS' if ok else 'FAIL'} " + " ".join(f"{v:.8g}" for v in values[:10])
    return {"spectrum": ok}, [line] + [f"warning: {x}" for x in warn]


def _cmd_mollifier_scaling(c, w, args):
    g = GroupStructure.from_preset(args.preset or c.group)
    m = Mollifier(g, c.mollifier["profile"], int(c.mollifier["power"]), float(c.mollifier["radius"]))
    eps = c.epsilon_net().values
    rep = moderateness_slope(PotentialNet.delta(m), "sup", eps, lambda e: support_grid(g, e, radius=m.radius))
    Q = float(g.homogeneous_dimension)
    ok = abs(rep.slope + Q) <= 0.05
    rep.verdict["pass"] = ok and rep.verdict["pass"]
    rep.extra["Q"] = Q
    w.report("mollifier_scaling", rep)
    return {"mollifier-scaling": rep.passed}, [rep.summary_line() + f" Q={Q:g}"]


COMMANDS = {
    "solve": _cmd_solve,
    "moderateness": _cmd_moderateness,
    "uniqueness": _cmd_uniqueness,
    "consistency": _cmd_consistency,
    "apriori": _cmd_apriori,
    "embedding": _cmd_embedding,
    "spectrum": _cmd_spectrum,
    "mollifier-scaling": _cmd_mollifier_scaling,
}


def run(subcommand: str, config: RunConfig, out: str | Path | None = None, args=None, echo=print) -> int:
    """Execute one subcommand; returns the process exit code."""
    if subcommand not in COMMANDS:
        echo(f"error: unknown subcommand {subcommand!r}", file=sys.stderr) if echo is print else echo(
            f"error: unknown subcommand {subcommand!r}")
        return 2
    args = args or argparse.Namespace(preset=None, count=None)
    out = Path(out or os.environ.get(OUTPUT_ENV) or config.output)
    w = ArtifactWriter(out)
    w.text("config.json", serialize_config(config))
    verdicts: dict = {}
    try:
        verdicts, lines = COMMANDS[subcommand](config, w, args)
    except ConfigError as exc:
        echo(f"config error: {exc}")
        return 2
    except (ResolutionError, PreconditionError) as exc:
        echo(f"{subcommand}: FAIL {exc}")
        verdicts = {subcommand: False}
        w.manifest(subcommand, config, verdicts)
        return 1
    except NumericalBlowupError as exc:
        echo(f"{subcommand}: FAIL {exc}")
        verdicts = {subcommand: False}
        w.manifest(subcommand, config, verdicts)
        return 1
    for line in lines:
        echo(line)
    w.manifest(subcommand, config, verdicts)
    return 0 if all(verdicts.values()) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracschrod", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", "-c", help="JSON run configuration")
    ap.add_argument("--out", "-o", help=f"output directory (overrides ${OUTPUT_ENV} and config.output)")
    ap.add_argument("--preset", help="group preset for spectrum / mollifier-scaling")
    ap.add_argument("--count", type=int, help="number of eigenvalues for spectrum")
    ap.add_argument("--seed", type=int, help="override config seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
        config = parse_config(text)
        if args.seed is not None:
            config.seed = args.seed
        if args.preset:
            GroupStructure.from_preset(args.preset)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(args.subcommand, config, args.out, args)


if __name__ == "__main__":
    sys.exit(main())
