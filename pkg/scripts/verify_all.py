"""Run the verification suite for several seeds and summarise the worst residual per check."""
import argparse
from collections import defaultdict

from curiosity_geom.cli import bundled_mdp_path
from curiosity_geom.config import ExperimentConfig
from curiosity_geom.mdp import load_mdp
from curiosity_geom.verify import verify_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()

    mdp = load_mdp(bundled_mdp_path("swap"))
    worst, failures = defaultdict(float), defaultdict(int)
    tolerance, comparison = {}, {}
    for seed in args.seeds:
        for res in verify_suite(ExperimentConfig(seed=seed).validate(), mdp):
            tolerance[res.name], comparison[res.name] = res.tolerance, res.comparison
            # for ">=" checks the interesting value is the smallest one
            if res.comparison == ">=":
                worst[res.name] = min(worst.get(res.name, float("inf")), res.residual)
            else:
                worst[res.name] = max(worst[res.name], res.residual)
            failures[res.name] += not res.passed
    for name in sorted(worst):
        print(f"{name:40s} {worst[name]:11.3e} {comparison[name]} {tolerance[name]:9.1e}  "
              f"failed {failures[name]}/{len(args.seeds)}")


if __name__ == "__main__":
    main()
