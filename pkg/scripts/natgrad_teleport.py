"""Natural versus vanilla occupancy-gradient ascent on the teleport MDP.

Reports the iterations each method needs to come within ``--gap`` of the
occupancy-space oracle for every (alpha, beta) cell.
"""
import argparse

from curiosity_geom.information import RewardSpec
from curiosity_geom.policy import optimize, teleport_oracle, teleport_problem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, default=6)
    ap.add_argument("--horizon", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--gap", type=float, default=1e-4)
    args = ap.parse_args()

    mdp = teleport_problem(args.states, args.horizon, args.seed)
    print(f"{'alpha':>6} {'beta':>6} {'oracle':>10} {'natural':>8} {'vanilla':>8}")
    for a in (-1.0, -0.5, 0.0, 0.5):
        for b in (0.1, 0.3, 1.0, 3.0, 10.0):
            spec = RewardSpec.alpha(mdp.reward, b, a)
            target = teleport_oracle(spec, mdp.horizon).value
            its = []
            for method in ("natural", "vanilla"):
                run = optimize(mdp, spec, method, args.iterations, target=target, target_gap=args.gap)
                its.append("-" if run.reached is None else str(run.reached))
            print(f"{a:6.2f} {b:6.2f} {target:10.5f} {its[0]:>8} {its[1]:>8}")


if __name__ == "__main__":
    main()
