"""Run the standard experiment battery through the CLI and print one verdict line per run.

Usage: python scripts/run_experiments.py [OUTDIR]
"""

import json
import sys
import tempfile
from pathlib import Path

from fracschrod.cli import main

SMALL = {"points": [1024], "extents": [10], "s": 1, "dt": 1e-3, "T": 1.0,
         "epsilon": {"eps0": 0.2, "ratio": 0.8, "count": 6}}

RUNS = [
    ("moderateness", {**SMALL, "dt": 1e-4, "epsilon": {"eps0": 0.4, "ratio": 0.7, "count": 6}}, []),
    ("uniqueness", SMALL, []),
    ("consistency", {**SMALL, "potential": "well", "epsilon": {"eps0": 0.4, "ratio": 0.65, "count": 6}}, []),
    ("apriori", {**SMALL, "potential": "well"}, []),
    ("embedding", {}, []),
    ("spectrum", {}, ["--preset", "heisenberg:1", "--count", "10"]),
    ("spectrum", {"spectrum": {"lambda": 1.0, "mu": 0.5, "count": 6}}, ["--preset", "engel"]),
    ("mollifier-scaling", {}, ["--preset", "engel"]),
]


def run_all(root: Path) -> int:
    worst = 0
    for k, (cmd, cfg, extra) in enumerate(RUNS):
        out = root / f"{k:02d}_{cmd}"
        out.mkdir(parents=True, exist_ok=True)
        path = out / "config.json"
        path.write_text(json.dumps(cfg))
        code = main([cmd, "-c", str(path), "--out", str(out), *extra])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="fracschrod_"))
    code = run_all(root)
    print(f"artifacts in {root}")
    sys.exit(code)
