"""Per-eps scaling tables with a log-log fit, plus JSON/CSV round-tripping."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np


def loglog_fit(eps: Sequence[float], values: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares fit ``log v = slope * log eps + intercept``.

    Returns ``(slope, intercept, rms_residual)``; non-positive values are
    skipped.  Fewer than two usable points give a zero slope.
    """
    e = np.asarray(eps, float)
    v = np.asarray(values, float)
    ok = (v > 0) & np.isfinite(v) & (e > 0)
    if ok.sum() < 2:
        return 0.0, float(np.log(v[ok][0])) if ok.any() else 0.0, 0.0
    x, y = np.log(e[ok]), np.log(v[ok])
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(res**2)))


@dataclass
class ScalingReport:
    experiment: str
    eps: list[float]
    values: list[float]
    slope: float = 0.0
    intercept: float = 0.0
    residual: float = 0.0
    N: float = 0.0
    N_ceil: int = 0
    verdict: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    seed: int | None = None

    @classmethod
    def fitted(cls, experiment: str, eps, values, **kw) -> "ScalingReport":
        eps = [float(e) for e in eps]
        values = [float(v) for v in values]
        slope, intercept, residual = loglog_fit(eps, values)
        n = -slope
        return cls(experiment, eps, values, slope, intercept, residual, n,
                   int(math.ceil(n - 1e-9)) if n > 0 else 0, **kw)

    @property
    def passed(self) -> bool:
        return bool(self.verdict.get("pass", False))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingReport":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ScalingReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "value"])
        for e, v in zip(self.eps, self.values):
            w.writerow([repr(e), repr(v)])
        return buf.getvalue()

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.experiment}: {status} slope={self.slope:.4g} N={self.N:.4g} residual={self.residual:.3g}"


def table_from_csv(text: str) -> tuple[list[float], list[float]]:
    rows = list(csv.reader(io.StringIO(text)))
    eps = [float(r[0]) for r in rows[1:]]
    vals = [float(r[1]) for r in rows[1:]]
    return eps, vals
