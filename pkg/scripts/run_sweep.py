"""Beta sweeps for several alphas on a random reward, printed as a small table.

Shows how the optimum slides from the reward-greedy point towards the uniform
occupancy and how far each point sits from the fitted trade-off geodesic.
"""
import argparse

import numpy as np

from curiosity_geom.optima import OptimaProblem, beta_sweep
from curiosity_geom._utils import make_rng
from curiosity_geom.geometry import alpha_divergence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.1, 0.3, 1.0, 3.0, 10.0])
    args = ap.parse_args()

    r = make_rng(args.seed, 7).uniform(-1.0, 1.0, args.states)
    u = np.full(args.states, 1.0 / args.states)
    print("reward:", np.array2string(r, precision=3))
    print(f"{'alpha':>6} {'beta':>7} {'return':>9} {'D(p||u)':>10} {'t':>7} {'residual':>10}")
    for a in (-1.0, -0.5, 0.0, 0.5):
        res = beta_sweep(OptimaProblem(r, a, 1.0), args.betas)
        for b, p, t, resid in zip(res.betas, res.points, res.fitted_t, res.residuals):
            print(f"{a:6.2f} {b:7.2f} {p @ r:9.4f} {alpha_divergence(p, u, a):10.5f} {t:7.4f} {resid:10.2e}")


if __name__ == "__main__":
    main()
