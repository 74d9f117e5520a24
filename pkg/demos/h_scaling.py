"""Step-size scaling of the one-step sampler.

Runs the grid-discretized consistency map at several uniform-stage step
sizes h, subtracts the h-independent floor obtained by Richardson
extrapolation on the uniform-grid family, and fits a log-log line to the
excess error.  The fitted slope should sit near 1: the discretization
contribution to the Wasserstein-2 error is first order in h.

Usage: python3 demos/h_scaling.py [seed]
"""

import sys

from cmlab.distributions import MixtureParams
from cmlab.harness import fit_loglog, h_sweep_one_step

import numpy as np


def main() -> None:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    dist = MixtureParams.gaussian(np.zeros(2), 4.0 * np.ones(2))
    h_list = [0.2, 0.1, 0.05, 0.025]
    rep = h_sweep_one_step(dist, delta=0.01, T=2.0, h_list=h_list,
                           floor_h=0.0125, n=50_000, seed=seed)

    print(f"floor (Richardson, at h={rep['floor_h']}): {rep['floor']:.6f}")
    print(f"{'h':>8}  {'w2':>10}  {'excess':>10}")
    for row in rep["rows"]:
        print(f"{row['h']:>8g}  {row['w2']:>10.6f}  "
              f"{row['w2_excess']:>10.6f}")
    fit = fit_loglog([r["h"] for r in rep["rows"]],
                     [r["w2_excess"] for r in rep["rows"]])
    print(f"\nfitted slope: {fit.slope:.3f}  (r^2 = {fit.r_squared:.5f}, "
          f"expected ~1)")


if __name__ == "__main__":
    main()
