"""Command-line front end: ``curiosity-geom <mode> [--config PATH] [flags]``.

Exit status is 0 when every check of the mode passed, 1 when a check failed
(the failing checks are named on stderr) and 2 for an invalid configuration
or MDP file.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from .config import MODES, ConfigError, ExperimentConfig, load_config
from .density import estimator_consistency_report, grid_uniform_check
from .dpi import dpi_battery
from .information import RewardSpec
from .mdp import (
    MdpValidationError,
    Policy,
    augmented_stationary,
    empirical_occupancy,
    load_mdp,
    marginalize_counter,
    occupancy,
    occupancy_return,
    rollout_return,
)
from .optima import (
    OptimaProblem,
    beta_sweep,
    closed_form_optimum,
    projection_orthogonality,
    solve_numerical,
    sweep_rows,
)
from .policy import (
    SoftmaxPolicy,
    finite_difference_jacobian,
    occupancy_jacobian,
    optimize,
    teleport_oracle,
    teleport_problem,
    trace_csv,
)
from .reporting import write_csv, write_json
from ._utils import atomic_write_text, make_rng
from .verify import CheckResult, verify_suite, worker_count

SWEEP_HEADER = ("alpha", "beta", "state", "probability", "return_value", "divergence_to_uniform",
                "geodesic_residual")


def bundled_mdp_path(name: str = "swap") -> Path:
    return Path(str(resources.files("curiosity_geom") / "data" / f"{name}_mdp.json"))


def _load_mdp(cfg: ExperimentConfig):
    if cfg.mdp is None:
        return None
    return load_mdp(bundled_mdp_path(cfg.mdp) if cfg.mdp == "swap" else cfg.mdp)


def _check(name, anchor, residual, tol, comparison="<=") -> CheckResult:
    ok = residual <= tol if comparison == "<=" else residual >= tol
    return CheckResult(name, anchor, float(residual), float(tol), bool(ok), comparison)


def _pmap(fn, items):
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(fn, items))


def _out(cfg: ExperimentConfig, ext: str) -> Path:
    return Path(cfg.out) / f"{cfg.mode}_{cfg.seed}.{ext}"


# -- modes ------------------------------------------------------------------------


def run_occupancy(cfg: ExperimentConfig, mdp) -> list[CheckResult]:
    policy = Policy.uniform(mdp.num_states, mdp.num_actions)
    exact = occupancy(mdp, policy).dist
    emp = empirical_occupancy(mdp, policy, cfg.episodes, cfg.seed)
    marg = marginalize_counter(augmented_stationary(mdp, policy), mdp.num_states)
    mean, se = rollout_return(mdp, policy, cfg.episodes, cfg.seed)
    ret = occupancy_return(exact, mdp.reward, mdp.horizon)
    z = abs(ret - mean) / se if se > 0 else (0.0 if abs(ret - mean) < 1e-12 else np.inf)
    write_csv(_out(cfg, "csv"), ("state", "occupancy", "empirical", "augmented_marginal"),
              [(s, exact[s], emp[s], marg[s]) for s in range(mdp.num_states)])
    checks = [
        _check("mdp.augmented_chain", "occupancy is the counter-chain stationary marginal",
               np.abs(marg - exact).max(), 1e-10),
        _check("mdp.return_identity", "return equals (n+1) times occupancy-weighted reward", z, 3.0),
    ]
    write_json(_out(cfg, "json"), {"mdp": mdp.name, "return_exact": ret, "return_mc_mean": mean,
                                   "return_mc_stderr": se, "checks": [c.to_dict() for c in checks]})
    return checks


def _reward_and_horizon(cfg, mdp):
    if cfg.reward is not None:
        return np.asarray(cfg.reward, dtype=float), cfg.horizon
    return mdp.reward, mdp.horizon


def run_optima(cfg: ExperimentConfig, mdp) -> list[CheckResult]:
    r, n = _reward_and_horizon(cfg, mdp)
    cells = [(a, b) for a in cfg.alpha for b in cfg.beta]

    def solve(cell):
        a, b = cell
        prob = OptimaProblem(r, a, b, n)
        cf = closed_form_optimum(prob)
        num = solve_numerical(prob, seed=cfg.seed).p
        orth = projection_orthogonality(prob) if b > 0 and np.all(cf > 0) else 0.0
        return cf, num, orth

    results = _pmap(solve, cells)
    rows, worst_eq, worst_orth = [], 0.0, 0.0
    for (a, b), (cf, num, orth) in zip(cells, results):
        l1 = float(np.abs(cf - num).sum())
        worst_eq, worst_orth = max(worst_eq, l1), max(worst_orth, orth)
        rows += [(a, b, s, cf[s], num[s], l1, orth) for s in range(r.size)]
    write_csv(_out(cfg, "csv"), ("alpha", "beta", "state", "closed_form", "numerical", "l1_gap",
                                 "orthogonality_residual"), rows)
    return [
        _check("optima.oracle_equivalence", "closed-form curiosity optimum", worst_eq, cfg.tol_optimum),
        _check("optima.projection_orthogonality", "alpha-projection from the uniform occupancy", worst_orth, 1e-6),
    ]


def run_sweep(cfg: ExperimentConfig, mdp) -> list[CheckResult]:
    r, n = _reward_and_horizon(cfg, mdp)
    results = _pmap(lambda a: beta_sweep(OptimaProblem(r, a, cfg.beta[0], n), cfg.beta), cfg.alpha)
    rows = [row for res in results for row in sweep_rows(res, r, n)]
    write_csv(_out(cfg, "csv"), SWEEP_HEADER, rows)
    worst = max(res.max_residual for res in results)
    return [_check("optima.beta_geodesic", "trade-off curve is an (alpha+2)-geodesic", worst, cfg.tol_geodesic)]


def run_natgrad(cfg: ExperimentConfig, mdp) -> list[CheckResult]:
    teleport = mdp is None
    if teleport:
        mdp = teleport_problem(6, 8, cfg.seed)
    rng = make_rng(cfg.seed, 71)
    sp = SoftmaxPolicy(rng.normal(size=(mdp.num_states, mdp.num_actions)))
    fd = finite_difference_jacobian(mdp, sp)
    jac_err = float(np.abs(occupancy_jacobian(mdp, sp) - fd).max() / max(np.abs(fd).max(), 1e-12))
    checks = [_check("policy.jacobian", "analytic occupancy Jacobian", jac_err, cfg.tol_gradient)]
    summary, first_trace = [], None
    worst_gap, worst_drop = 0.0, 0.0
    for a in cfg.alpha:
        for b in cfg.beta:
            spec = RewardSpec.alpha(mdp.reward, b, a)
            target = teleport_oracle(spec, mdp.horizon).value if teleport else None
            for method in ("natural", "vanilla"):
                run = optimize(mdp, spec, method, cfg.iterations, target=target)
                objs = np.array([t[1] for t in run.trace])
                worst_drop = max(worst_drop, float(np.max(objs[:-1] - objs[1:], initial=0.0)))
                entry = {"alpha": a, "beta": b, "method": method, "final_objective": run.final.objective,
                         "iterations": run.final.iteration, "reached": run.reached, "oracle": target}
                summary.append(entry)
                if teleport and method == "natural":
                    worst_gap = max(worst_gap, target - run.final.objective)
                if first_trace is None:
                    first_trace = run.trace
    atomic_write_text(_out(cfg, "csv"), trace_csv(first_trace))
    checks.append(_check("policy.monotone_ascent", "backtracking keeps the objective non-decreasing",
                         worst_drop, 0.0))
    if teleport:
        checks.append(_check("policy.teleport_oracle", "natural occupancy ascent reaches the optimum",
                             worst_gap, 1e-4))
    write_json(_out(cfg, "json"), {"runs": summary, "checks": [c.to_dict() for c in checks]})
    return checks


def run_dpi(cfg: ExperimentConfig, mdp) -> list[CheckResult]:
    rep = dpi_battery(trials=1000, seed=cfg.seed)
    write_json(_out(cfg, "json"), {"trials": rep.trials, "min_gap": rep.min_gap,
                                   "equality_cases": rep.equality_cases,
                                   "equality_mismatches": rep.equality_mismatches,
                                   "composition_violations": rep.composition_violations,
                                   "counterexample": rep.counterexample})
    witness = -rep.counterexample["gap"] if rep.counterexample else 0.0
    return [
        _check("dpi.min_gap", "f-information returns obey data processing", -rep.min_gap, 1e-12),
        _check("dpi.equality_case", "equality exactly for sufficient statistics", rep.equality_mismatches, 0.0),
        _check("dpi.convex_witness", "convex generators violate data processing", witness, 1e-6, ">="),
        _check("dpi.composition", "coarsening never lowers the return", rep.composition_violations, 0.0),
    ]


def run_knn(cfg: ExperimentConfig, mdp) -> list[CheckResult]:
    reports = [estimator_consistency_report("uniform_box", dim=1, seed=cfg.seed),
               estimator_consistency_report("gaussian", dim=2, seed=cfg.seed)]
    grid_err = float(np.abs(grid_uniform_check(10_000) - 1.0).max())
    write_json(_out(cfg, "json"), {"reports": [vars(r) for r in reports], "grid_max_rel_error": grid_err})
    checks = [_check(f"density.knn_consistency.{r.generator}", "kNN log-density error decreases with N",
                     r.inversions, 1.0) for r in reports]
    checks.append(_check("density.knn_grid", "kNN density on an even grid within 25%", grid_err, 0.25))
    return checks


def run_verify(cfg: ExperimentConfig, mdp) -> list[CheckResult]:
    results = verify_suite(cfg, mdp)
    write_json(_out(cfg, "json"), {"seed": cfg.seed, "only": cfg.only,
                                   "checks": [r.to_dict() for r in results]})
    return results


RUNNERS = {
    "occupancy": run_occupancy,
    "optima": run_optima,
    "sweep": run_sweep,
    "natgrad": run_natgrad,
    "dpi": run_dpi,
    "knn": run_knn,
    "verify": run_verify,
}


def run(cfg: ExperimentConfig) -> tuple[int, list[CheckResult]]:
    """Execute one configured mode; returns ``(exit_status, checks)``."""
    mdp = _load_mdp(cfg)
    if cfg.mode == "verify" and mdp is None:
        mdp = load_mdp(bundled_mdp_path("swap"))
    checks = RUNNERS[cfg.mode](cfg, mdp)
    return (0 if all(c.passed for c in checks) else 1), checks


def _floats(values, name: str):
    if values is None:
        return None
    out = []
    for v in values:
        for x in str(v).split(","):
            if x.strip():
                try:
                    out.append(float(x))
                except ValueError:
                    raise ConfigError(name, f"not a number: {x!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curiosity-geom", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="TOML configuration file (flags override its values)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--alpha", nargs="+", help="alpha values (space or comma separated)")
    ap.add_argument("--beta", nargs="+", help="beta values (space or comma separated)")
    ap.add_argument("--reward", nargs="+", help="inline reward vector")
    ap.add_argument("--mdp", help="MDP JSON file, or 'swap' for the bundled fixture")
    ap.add_argument("--horizon", type=int)
    ap.add_argument("--episodes", type=int)
    ap.add_argument("--iterations", type=int)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--only", help="verify mode: keep checks whose name starts with this prefix")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {
            "mode": args.mode, "seed": args.seed, "alpha": _floats(args.alpha, "alpha"),
            "beta": _floats(args.beta, "beta"), "reward": _floats(args.reward, "reward"), "mdp": args.mdp,
            "horizon": args.horizon, "episodes": args.episodes, "iterations": args.iterations,
            "out": args.out, "only": args.only,
        }
        cfg = load_config(args.config, overrides)
        status, checks = run(cfg)
    except (ConfigError, MdpValidationError, FileNotFoundError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    failed = [c.name for c in checks if not c.passed]
    finite = [c.residual for c in checks if c.comparison == "<=" and np.isfinite(c.residual)]
    worst = max(finite) if finite else float("nan")
    print(f"{cfg.mode} seed={cfg.seed}: {len(checks) - len(failed)} passed, {len(failed)} failed; "
          f"max residual {worst:.3g}")
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
