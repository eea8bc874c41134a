"""Aggregated numerical verification of the library's claims.

Each check computes a residual and compares it with a tolerance.  Most
checks pass when ``residual <= tolerance``; witness checks (showing that a
property fails outside its hypotheses) pass when ``residual >= tolerance``.
A check that raises is recorded as failed and the suite continues.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._utils import make_rng, random_interior
from .config import ExperimentConfig
from .density import estimator_consistency_report, grid_uniform_check
from .dpi import dpi_battery
from .geometry import (
    GeodesicSpec,
    alpha_divergence,
    alpha_generator,
    custom_generator,
    geodetic_alignment,
    renyi_gradient,
    kl_divergence,
)
from .information import alpha_information_value, count_bonus_identity, shannon_entropy
from .mdp import (
    FiniteMdp,
    augmented_stationary,
    marginalize_counter,
    occupancy,
    occupancy_return,
    random_mdp,
    random_policy,
    rollout_return,
)
from .optima import (
    OptimaProblem,
    beta_sweep,
    closed_form_optimum,
    divergence_min_equivalence,
    gibbs_optimum,
    projection_orthogonality,
    solve_numerical,
)
from .policy import SoftmaxPolicy, finite_difference_jacobian, geodesic_concavity_check, occupancy_jacobian

THREADS_ENV = "CURIOSITY_GEOM_THREADS"


def worker_count() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


@dataclass
class CheckResult:
    name: str
    paper_anchor: str
    residual: float
    tolerance: float
    passed: bool
    comparison: str = "<="
    error: str | None = None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "paper_anchor": self.paper_anchor,
            "residual": None if not math.isfinite(self.residual) else self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "comparison": self.comparison,
        }
        if self.error:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    tolerance: float
    run: Callable[[ExperimentConfig, "FiniteMdp | None"], float]
    comparison: str = "<="

    def evaluate(self, cfg: ExperimentConfig, mdp) -> CheckResult:
        try:
            res = float(self.run(cfg, mdp))
        except Exception as exc:  # a failing check must not stop the suite
            return CheckResult(self.name, self.anchor, float("nan"), self.tolerance, False,
                               self.comparison, f"{type(exc).__name__}: {exc}")
        ok = res <= self.tolerance if self.comparison == "<=" else res >= self.tolerance
        return CheckResult(self.name, self.anchor, res, self.tolerance, bool(ok), self.comparison)


def _pairs(seed: int, key: int, count: int, dims=(3, 5, 8), concentration: float = 1.0):
    for i in range(count):
        rng = make_rng(seed, key, i)
        d = dims[i % len(dims)]
        yield random_interior(rng, d, concentration), random_interior(rng, d, concentration)


def _kl_limit(cfg, mdp):
    worst = 0.0
    for p, q in _pairs(cfg.seed, 101, 50):
        worst = max(worst, abs(alpha_divergence(p, q, -1 + 1e-5) - kl_divergence(p, q)),
                    abs(alpha_divergence(p, q, 1 - 1e-5) - kl_divergence(q, p)))
    return worst


def _geodesic_affine(cfg, mdp):
    worst = 0.0
    ts = np.linspace(0, 1, 9)
    for i, (p, q) in enumerate(_pairs(cfg.seed, 102, 30)):
        for order in (-0.5, 0.0, 0.5, 3.0):
            geo = GeodesicSpec(p, q, order, normalized=False)
            k = geo.power
            coords = np.array([geo.raw(t) ** k for t in ts])
            second = coords[:-2] - 2 * coords[1:-1] + coords[2:]
            worst = max(worst, float(np.abs(second).max() / np.abs(coords).max()))
    return worst


def _alignment_family(cfg, mdp):
    worst = 0.0
    for i, (p, q) in enumerate(_pairs(cfg.seed, 103, cfg.trials)):
        a = (-1.0, -0.5, 0.0, 0.3, 0.5, 2.0)[i % 6]
        worst = max(worst, 1.0 - abs(geodetic_alignment(p, q, alpha_generator(a), a)))
    return worst


def exp_generator():
    """``e^(x-1) - x``: convex with ``f(1) = 0`` and ``f''(1) = 1``, but outside the alpha family."""
    return custom_generator(lambda x: np.exp(x - 1) - x, lambda x: np.exp(x - 1) - 1, 1.0,
                            lambda x: np.exp(x - 1), label="exp(x-1)-x")


def _alignment_outside_family(cfg, mdp):
    """``min`` over candidate orders of the largest ``1 - |cos|`` over sampled pairs.

    The check passes when every candidate order is defeated by some pair.
    """
    f = exp_generator()
    pairs = list(_pairs(cfg.seed, 104, cfg.trials, concentration=5.0))
    worst_per_order = []
    for a in np.linspace(-5.0, 15.0, 41):
        worst_per_order.append(max(1.0 - abs(geodetic_alignment(p, q, f, a)) for p, q in pairs))
    return min(worst_per_order)


def _alignment_renyi(cfg, mdp):
    """Renyi divergence is aligned with the order ``1 - 2 lam`` geodesic."""
    worst = 0.0
    for i, (p, q) in enumerate(_pairs(cfg.seed, 105, cfg.trials)):
        lam = (0.3, 0.5, 2.0)[i % 3]
        grad = lambda a, b, lam=lam: renyi_gradient(a, b, lam)
        worst = max(worst, 1.0 - abs(geodetic_alignment(p, q, grad, 1.0 - 2.0 * lam)))
    return worst


def _random_mdps(cfg, count):
    for i in range(count):
        rng = make_rng(cfg.seed, 201, i)
        d, m, n = int(rng.integers(2, 7)), int(rng.integers(1, 4)), int(rng.integers(0, 9))
        yield random_mdp(rng, d, m, n), random_policy(rng, d, m)


def _augmented_chain(cfg, mdp):
    cases = list(_random_mdps(cfg, 20))
    if mdp is not None:
        cases.append((mdp, random_policy(make_rng(cfg.seed, 202), mdp.num_states, mdp.num_actions)))
    worst = 0.0
    for m_, pol in cases:
        aug = augmented_stationary(m_, pol)
        worst = max(worst, float(np.abs(marginalize_counter(aug, m_.num_states) - occupancy(m_, pol).dist).max()))
    return worst


def _return_identity(cfg, mdp):
    """Largest ``|exact - Monte Carlo| / stderr`` (pass when <= 3)."""
    worst = 0.0
    for i, (m_, pol) in enumerate(_random_mdps(cfg, 20)):
        mean, se = rollout_return(m_, pol, cfg.episodes, cfg.seed * 1000 + i)
        exact = occupancy_return(occupancy(m_, pol), m_.reward)
        gap = abs(exact - mean)
        worst = max(worst, gap / se if se > 0 else (0.0 if gap < 1e-12 else np.inf))
    return worst


def _count_identity(cfg, mdp):
    worst = 0.0
    for i in range(50):
        rng = make_rng(cfg.seed, 301, i)
        counts = rng.integers(1, 30, size=int(rng.integers(2, 9)))
        a, b = count_bonus_identity(counts, int(counts.sum()))
        worst = max(worst, float(np.abs(a - b).max()))
    return worst


def _entropy_identity(cfg, mdp):
    worst = 0.0
    for i in range(50):
        p = random_interior(make_rng(cfg.seed, 302, i), 6)
        worst = max(worst, abs(float(p @ alpha_information_value(p, -1.0)) - shannon_entropy(p)))
    return worst


def _dpi(cfg):
    return dpi_battery(trials=1000, seed=cfg.seed)


def _optima_grid(cfg):
    for a in (-1.0, -0.5, 0.0, 0.5):
        for b in (0.1, 1.0, 10.0):
            for i in range(3):
                rng = make_rng(cfg.seed, 401, i)
                yield OptimaProblem(rng.uniform(-1, 1, int(rng.integers(2, 9))), a, b)


def _oracle_equivalence(cfg, mdp):
    return max(float(np.abs(closed_form_optimum(pr) - solve_numerical(pr, seed=cfg.seed).p).sum())
               for pr in _optima_grid(cfg))


def _gibbs(cfg, mdp):
    worst = 0.0
    for pr in _optima_grid(cfg):
        if pr.alpha == -1.0:
            worst = max(worst, float(np.abs(closed_form_optimum(pr) - gibbs_optimum(pr.reward, pr.beta)).sum()))
    return worst


def _divergence_min(cfg, mdp):
    return max(divergence_min_equivalence(pr).distance for pr in _optima_grid(cfg))


def _orthogonality(cfg, mdp):
    return max(projection_orthogonality(pr) for pr in _optima_grid(cfg))


def _beta_geodesic(cfg, mdp):
    worst = 0.0
    for a in (-1.0, -0.5, 0.0, 0.5):
        for i in range(3):
            rng = make_rng(cfg.seed, 402, i)
            r = rng.uniform(-1, 1, int(rng.integers(2, 7)))
            worst = max(worst, beta_sweep(OptimaProblem(r, a, 1.0), [0.1, 0.3, 1, 3, 10]).max_residual)
    return worst


def _concavity(cfg, mdp):
    rng = make_rng(cfg.seed, 501)
    r = rng.uniform(-1, 1, 5)
    worst = 0.0
    for b in (0.0, 0.1, 1.0, 10.0):
        worst = max(worst, geodesic_concavity_check(r, -1.0, b, trials=20, seed=cfg.seed))
    big = 1e3 * float(np.abs(r).max())
    for a in (-0.5, 0.0, 0.5):
        worst = max(worst, geodesic_concavity_check(r, a, big, trials=20, seed=cfg.seed))
    return worst


def _jacobian(cfg, mdp):
    worst = 0.0
    for i in range(5):
        rng = make_rng(cfg.seed, 601, i)
        m_ = random_mdp(rng, 4, 2, 5)
        sp = SoftmaxPolicy(rng.normal(size=(4, 2)))
        fd = finite_difference_jacobian(m_, sp)
        worst = max(worst, float(np.abs(occupancy_jacobian(m_, sp) - fd).max() / max(np.abs(fd).max(), 1e-12)))
    return worst


def _knn_consistency(cfg, mdp):
    return float(estimator_consistency_report("uniform_box", dim=1, seed=cfg.seed).inversions)


def _knn_grid(cfg, mdp):
    return float(np.abs(grid_uniform_check(10_000) - 1.0).max())


CHECKS = (
    Check("geometry.kl_limit", "alpha-divergence tends to KL at alpha = +-1", 1e-4, _kl_limit),
    Check("geometry.geodesic_affine", "alpha-geodesics are affine in power coordinates", 1e-8, _geodesic_affine),
    Check("geometry.alignment_family", "alpha-divergences are geodetic", 1e-8, _alignment_family),
    Check("geometry.alignment_outside_family", "generators outside the alpha family are not geodetic",
          1e-3, _alignment_outside_family, ">="),
    Check("geometry.alignment_renyi", "Renyi divergence is a monotone function of an alpha-divergence",
          1e-8, _alignment_renyi),
    Check("mdp.augmented_chain", "occupancy is the counter-chain stationary marginal", 1e-10, _augmented_chain),
    Check("mdp.return_identity", "return equals (n+1) times occupancy-weighted reward", 3.0, _return_identity),
    Check("information.count_identity", "0-information is an affine count bonus", 1e-12, _count_identity),
    Check("information.entropy_identity", "expected (-1)-information is Shannon entropy", 1e-12, _entropy_identity),
    Check("optima.oracle_equivalence", "closed-form curiosity optimum", 1e-6, _oracle_equivalence),
    Check("optima.gibbs", "alpha = -1 optimum is a Gibbs distribution", 1e-8, _gibbs),
    Check("optima.divergence_min", "optimum minimises D_alpha to uniform on its iso-return set",
          1e-5, _divergence_min),
    Check("optima.projection_orthogonality", "alpha-projection from the uniform occupancy", 1e-6, _orthogonality),
    Check("optima.beta_geodesic", "trade-off curve is an (alpha+2)-geodesic", 1e-5, _beta_geodesic),
    Check("policy.concavity", "curiosity objective is geodesically concave", 1e-9, _concavity),
    Check("policy.jacobian", "analytic occupancy Jacobian", 1e-5, _jacobian),
    Check("density.knn_consistency", "kNN log-density error decreases with N (inversions)", 1.0, _knn_consistency),
    Check("density.knn_grid", "kNN density on an even grid within 25%", 0.25, _knn_grid),
)


def _dpi_checks(cfg) -> list[CheckResult]:
    anchor = "f-information returns obey data processing"
    try:
        rep = _dpi(cfg)
    except Exception as exc:
        err = f"{type(exc).__name__}: {exc}"
        return [CheckResult(n, anchor, float("nan"), 0.0, False, "<=", err)
                for n in ("dpi.min_gap", "dpi.equality_case", "dpi.convex_witness", "dpi.composition")]
    witness = -rep.counterexample["gap"] if rep.counterexample else float("nan")
    return [
        CheckResult("dpi.min_gap", anchor, -rep.min_gap, 1e-12, -rep.min_gap <= 1e-12),
        CheckResult("dpi.equality_case", "equality exactly for sufficient statistics",
                    float(rep.equality_mismatches), 0.0, rep.equality_mismatches == 0),
        CheckResult("dpi.convex_witness", "convex generators violate data processing", witness, 1e-6,
                    bool(witness >= 1e-6), ">="),
        CheckResult("dpi.composition", "coarsening never lowers the return",
                    float(rep.composition_violations), 0.0, rep.composition_violations == 0),
    ]


def verify_suite(cfg: ExperimentConfig, mdp: FiniteMdp | None = None) -> list[CheckResult]:
    """Run every check (or those whose name starts with ``cfg.only``), sorted by name."""
    only = cfg.only
    selected = [c for c in CHECKS if only is None or c.name.startswith(only)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(lambda c: c.evaluate(cfg, mdp), selected))
    if only is None or "dpi".startswith(only) or only.startswith("dpi"):
        results += [r for r in _dpi_checks(cfg) if only is None or r.name.startswith(only)]
    return sorted(results, key=lambda r: r.name)
