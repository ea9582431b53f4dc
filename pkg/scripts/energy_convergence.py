"""Print the energy drift of Strang and Lie splitting against the time step.

A Gaussian well keeps the problem smooth, so the halving ratios should sit
near 4 for Strang and near 2 for Lie.
"""

import numpy as np

from fracschrod.evolution import SolverConfig, evolve
from fracschrod.fields import Grid, sample_gaussian
from fracschrod.spectral import FractionalOperator


def main():
    grid = Grid((10.0,), (1024,))
    op = FractionalOperator(grid, 1.0)
    u0 = sample_gaussian(grid)
    p = grid.sample(lambda x: 5.0 * np.exp(-x**2 / 2))
    steps = [2e-3, 1e-3, 5e-4, 2.5e-4]
    for scheme in ("strang", "lie"):
        drifts = [evolve(u0, p, op, SolverConfig(dt, 1.0, scheme, store_states=False)).energy_drift() for dt in steps]
        print(scheme)
        for k, (dt, d) in enumerate(zip(steps, drifts)):
            ratio = "" if k == 0 else f"  ratio {drifts[k - 1] / d:.3f}"
            print(f"  dt={dt:.2e}  drift={d:.3e}{ratio}")


if __name__ == "__main__":
    main()
