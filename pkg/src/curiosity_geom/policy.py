"""Tabular softmax policies, occupancy Jacobians and natural occupancy gradients.

The natural gradient uses the Fisher-Rao metric of occupancy space pulled
back through the policy-to-occupancy map,
``G = |f''(1)| J^T diag(1/p) J`` with ``J = d p / d theta``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from ._utils import make_rng, random_interior
from .geometry import FGenerator, GeodesicSpec
from .information import RewardSpec, alpha_information_value, shannon_entropy
from .mdp import FiniteMdp, Policy, agent_env_kernel, state_distributions, teleport_mdp
from .optima import NumericalOptimum, maximize_on_simplex


@dataclass(frozen=True)
class SoftmaxPolicy:
    logits: np.ndarray

    def __post_init__(self):
        th = np.array(self.logits, dtype=float)
        if th.ndim != 2 or not np.all(np.isfinite(th)):
            raise ValueError("logits must be a finite d x m matrix")
        th.setflags(write=False)
        object.__setattr__(self, "logits", th)

    @classmethod
    def zeros(cls, d: int, m: int) -> "SoftmaxPolicy":
        return cls(np.zeros((d, m)))

    @property
    def probs(self) -> np.ndarray:
        z = self.logits - self.logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    @property
    def policy(self) -> Policy:
        return Policy(self.probs)

    def flat(self) -> np.ndarray:
        return self.logits.ravel().copy()

    def moved(self, direction, step: float) -> "SoftmaxPolicy":
        return SoftmaxPolicy(self.logits + step * np.asarray(direction).reshape(self.logits.shape))


@dataclass(frozen=True)
class OptimizerState:
    logits: SoftmaxPolicy
    iteration: int = 0
    objective: float = float("nan")
    grad_norm: float = float("nan")
    damping: float = 0.0
    step: float = 0.0
    """Step length accepted on the last iteration (0 when none was)."""


def occupancy_of(mdp: FiniteMdp, sp: SoftmaxPolicy) -> np.ndarray:
    kernel = agent_env_kernel(mdp, sp.policy)
    return state_distributions(mdp, kernel).mean(axis=0)


def occupancy_jacobian(mdp: FiniteMdp, sp: SoftmaxPolicy) -> np.ndarray:
    """``d p_s / d theta_{s'a}`` as a ``d x (d m)`` matrix (columns in row-major ``(s', a)`` order).

    Only row ``s'`` of the kernel depends on ``theta_{s' .}``, with derivative
    ``pi(s', a) (delta(s', a, .) - M(s', .))``.  The product rule over the
    kernel powers then gives
    ``dp = 1/(n+1) sum_{j<n} x_j[s'] D_{s'a} (I + M + ... + M^{n-1-j})``
    where ``x_j`` is the state distribution at step ``j``.
    """
    d, m, n = mdp.num_states, mdp.num_actions, mdp.horizon
    if sp.logits.shape != (d, m):
        raise ValueError(f"logits shape {sp.logits.shape} does not match ({d}, {m})")
    pi = sp.probs
    kernel = np.einsum("sa,sat->st", pi, mdp.transition)
    if n == 0:
        return np.zeros((d, d * m))
    dk = pi[:, :, None] * (mdp.transition - kernel[:, None, :])
    xs = state_distributions(mdp, kernel)
    partial = [np.eye(d)]
    for _ in range(n - 1):
        partial.append(np.eye(d) + partial[-1] @ kernel)
    jac = np.zeros((d, m, d))
    for j in range(n):
        jac += np.einsum("s,sat,tu->sau", xs[j], dk, partial[n - 1 - j])
    return jac.reshape(d * m, d).T / (n + 1)


def finite_difference_jacobian(mdp: FiniteMdp, sp: SoftmaxPolicy, h: float = 1e-6) -> np.ndarray:
    """Central-difference oracle for :func:`occupancy_jacobian`."""
    theta = sp.flat()
    cols = []
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        plus = occupancy_of(mdp, SoftmaxPolicy((theta + e).reshape(sp.logits.shape)))
        minus = occupancy_of(mdp, SoftmaxPolicy((theta - e).reshape(sp.logits.shape)))
        cols.append((plus - minus) / (2 * h))
    return np.array(cols).T


def pullback_metric(mdp: FiniteMdp, sp: SoftmaxPolicy, f: FGenerator) -> np.ndarray:
    """``|f''(1)| J^T diag(1/p) J``, symmetric positive semidefinite."""
    p = occupancy_of(mdp, sp)
    bad = np.flatnonzero(p <= 0)
    if bad.size:
        raise ValueError(f"occupancy[{bad[0]}] is zero; the metric is undefined there")
    jac = occupancy_jacobian(mdp, sp)
    g = f.metric_scale * (jac.T / p) @ jac
    return 0.5 * (g + g.T)


def policy_objective(mdp: FiniteMdp, sp: SoftmaxPolicy, spec: RewardSpec) -> float:
    """``(n+1) sum p (r + beta f(1/p))``, divided by ``|f''(1)|`` when ``spec.adjust`` is set."""
    p = occupancy_of(mdp, sp)
    return occupancy_objective(p, spec, mdp.horizon)


def occupancy_objective(p, spec: RewardSpec, horizon: int) -> float:
    p = np.asarray(p, dtype=float)
    pos = p > 0
    val = float(p @ spec.extrinsic)
    if spec.beta > 0:
        val += spec.beta * float(np.sum(p[pos] * spec.generator(1.0 / p[pos])))
    if spec.adjust:
        val /= spec.generator.metric_scale
    return (horizon + 1) * val


def objective_gradient(mdp: FiniteMdp, sp: SoftmaxPolicy, spec: RewardSpec) -> np.ndarray:
    """Euclidean gradient in the logits: ``(n+1) J^T h`` with ``h_s = r_s + beta (f(1/p_s) - f'(1/p_s)/p_s)``."""
    p = occupancy_of(mdp, sp)
    x = 1.0 / p
    h = spec.extrinsic.astype(float).copy()
    if spec.beta > 0:
        h = h + spec.beta * (spec.generator(x) - spec.generator.deriv(x) * x)
    if spec.adjust:
        h = h / spec.generator.metric_scale
    return (mdp.horizon + 1) * occupancy_jacobian(mdp, sp).T @ h


class SingularMetricError(np.linalg.LinAlgError):
    pass


def natural_direction(metric: np.ndarray, grad: np.ndarray, damping: float) -> np.ndarray:
    """``(G + damping I)^+ grad`` via an eigendecomposition with a relative cutoff of 1e-12.

    With ``damping = 0`` the pseudo-inverse is used, which is exact whenever
    the gradient lies in the range of ``G``.  A gradient with a component
    outside that range cannot be preconditioned and raises.
    """
    g = metric + damping * np.eye(metric.shape[0])
    w, v = np.linalg.eigh(g)
    top = max(float(w.max()), 0.0)
    keep = w > 1e-12 * top if top > 0 else np.zeros_like(w, dtype=bool)
    coef = v.T @ grad
    gnorm = float(np.linalg.norm(grad))
    if gnorm > 0:
        outside = float(np.linalg.norm(coef[~keep]))
        if outside > 1e-8 * gnorm:
            raise SingularMetricError(
                f"metric is singular along the gradient (unmatched fraction {outside / gnorm:.2e}); "
                "use damping > 0"
            )
    return v[:, keep] @ (coef[keep] / w[keep])


def default_damping(metric: np.ndarray) -> float:
    return 1e-6 * float(np.trace(metric)) / metric.shape[0]


def _line_search(mdp, state: OptimizerState, spec, direction, grad, step, it_floor=1e-12) -> OptimizerState:
    """Armijo backtracking: halve ``step`` until the objective rises by ``1e-4 step grad.direction``."""
    sp = state.logits
    base = policy_objective(mdp, sp, spec) if np.isnan(state.objective) else state.objective
    slope = float(grad @ direction)
    gnorm = float(np.linalg.norm(grad))
    if slope <= 0 or gnorm == 0.0:
        return replace(state, iteration=state.iteration + 1, objective=base, grad_norm=gnorm, step=0.0)
    eta = float(step)
    while eta >= it_floor:
        cand = sp.moved(direction, eta)
        val = policy_objective(mdp, cand, spec)
        if np.isfinite(val) and val >= base + 1e-4 * eta * slope:
            return replace(state, logits=cand, iteration=state.iteration + 1, objective=val,
                           grad_norm=gnorm, step=eta)
        eta *= 0.5
    return replace(state, iteration=state.iteration + 1, objective=base, grad_norm=gnorm, step=0.0)


def natural_step(mdp: FiniteMdp, state: OptimizerState, spec: RewardSpec, step: float,
                 damping: float | None = None) -> OptimizerState:
    """One natural occupancy-gradient ascent step with Armijo backtracking.

    ``damping=None`` selects ``1e-6 trace(G) / dim``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if damping is not None and damping < 0:
        raise ValueError("damping must be >= 0")
    sp = state.logits
    grad = objective_gradient(mdp, sp, spec)
    metric = pullback_metric(mdp, sp, spec.generator)
    lam = default_damping(metric) if damping is None else float(damping)
    direction = natural_direction(metric, grad, lam)
    return replace(_line_search(mdp, state, spec, direction, grad, step), damping=lam)


def vanilla_policy_gradient_step(mdp: FiniteMdp, state: OptimizerState, spec: RewardSpec,
                                 step: float) -> OptimizerState:
    """Euclidean gradient ascent step with the same backtracking rule."""
    if not step > 0:
        raise ValueError("step must be positive")
    grad = objective_gradient(mdp, state.logits, spec)
    return replace(_line_search(mdp, state, spec, grad, grad, step), damping=0.0)


@dataclass
class OptimizationRun:
    final: OptimizerState
    trace: list
    """``(iteration, objective, grad_norm, step, entropy_of_occupancy)`` rows."""
    reached: int | None = None
    """First iteration whose objective came within the target gap, if a target was given."""


def optimize(mdp: FiniteMdp, spec: RewardSpec, method: str = "natural", iterations: int = 2000,
             step: float = 1.0, damping: float | None = None, init: SoftmaxPolicy | None = None,
             target: float | None = None, target_gap: float = 1e-4) -> OptimizationRun:
    """Run ``iterations`` steps of the chosen ascent, stopping early once ``target`` is reached."""
    if method not in ("natural", "vanilla"):
        raise ValueError(f"unknown method {method!r}")
    sp = init or SoftmaxPolicy.zeros(mdp.num_states, mdp.num_actions)
    state = OptimizerState(sp, 0, policy_objective(mdp, sp, spec), float("nan"),
                           0.0 if method == "vanilla" else float("nan"), 0.0)
    trace = [(0, state.objective, float("nan"), 0.0, shannon_entropy(occupancy_of(mdp, sp)))]
    reached = 0 if target is not None and state.objective >= target - target_gap else None
    for _ in range(iterations):
        if reached is not None:
            break
        if method == "natural":
            state = natural_step(mdp, state, spec, step, damping)
        else:
            state = vanilla_policy_gradient_step(mdp, state, spec, step)
        trace.append((state.iteration, state.objective, state.grad_norm, state.step,
                      shannon_entropy(occupancy_of(mdp, state.logits))))
        if target is not None and state.objective >= target - target_gap:
            reached = state.iteration
        if state.step == 0.0 and state.grad_norm < 1e-14:
            break
    return OptimizationRun(state, trace, reached)


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "objective", "grad_norm", "step", "entropy_of_occupancy"])
    for it, obj, gn, st, ent in trace:
        w.writerow([it, f"{obj:.17g}", f"{gn:.17g}", f"{st:.17g}", f"{ent:.17g}"])
    return buf.getvalue()


# -- oracles ----------------------------------------------------------------------


def teleport_floor(d: int, horizon: int) -> np.ndarray:
    """Per-state occupancy floor ``1/(d (n+1))`` of the teleport MDP (the start step is uniform)."""
    return np.full(d, 1.0 / (d * (horizon + 1)))


def teleport_oracle(spec: RewardSpec, horizon: int, tol: float = 1e-11, seed: int = 0) -> NumericalOptimum:
    """Best objective over the teleport MDP's achievable occupancies.

    Those occupancies are exactly ``u/(n+1) + n/(n+1) q`` for ``q`` in the
    simplex (a state-independent policy ``q`` realises each of them), i.e.
    the simplex cut down by the uniform floor.
    """
    d = spec.extrinsic.size
    res = maximize_on_simplex(spec.extrinsic, spec.beta, spec.generator, teleport_floor(d, horizon),
                              tol=tol, seed=seed)
    res.value = occupancy_objective(res.p, spec, horizon)
    return res


def teleport_problem(d: int = 6, horizon: int = 8, seed: int = 0):
    """Teleport MDP with a random reward in ``[-1, 1]``."""
    rng = make_rng(seed, 11)
    reward = rng.uniform(-1.0, 1.0, d)
    return teleport_mdp(d, horizon, reward)


# -- geodesic concavity ------------------------------------------------------------


def curiosity_objective(p, reward, alpha: float, beta: float, horizon: int = 0) -> float:
    p = np.asarray(p, dtype=float)
    return float((horizon + 1) * (p @ reward + beta * p @ alpha_information_value(p, alpha)))


def geodesic_concavity_check(r, alpha: float, beta: float, trials: int = 100, grid_points: int = 9,
                             horizon: int = 0, seed: int = 0, scheme: str = "parameter") -> float:
    """Largest concavity violation of the curiosity objective along order-``alpha`` geodesics.

    ``scheme="parameter"`` evaluates ``t -> R(gamma(t))`` on an even grid of
    the normalised geodesic and reports the largest positive second
    difference.  ``scheme="midpoint"`` instead checks, for each pair of
    neighbouring grid points ``a, b``, that ``R`` at the geodesic midpoint
    of ``a`` and ``b`` is at least ``(R(a) + R(b)) / 2``; the shortfall is
    the violation.  The two agree for the mixture geodesic (``alpha = -1``),
    where the normalised curve is affinely parameterised.
    """
    if trials < 1 or grid_points < 5:
        raise ValueError("need trials >= 1 and grid_points >= 5")
    if scheme not in ("parameter", "midpoint"):
        raise ValueError(f"unknown scheme {scheme!r}")
    r = np.asarray(r, dtype=float)
    d = r.size
    ts = np.linspace(0.0, 1.0, grid_points)
    worst = 0.0
    for i in range(trials):
        rng = make_rng(seed, 21, i)
        p, q = random_interior(rng, d), random_interior(rng, d)
        geo = GeodesicSpec(p, q, alpha, normalized=True)
        pts = [geo(t) for t in ts]
        vals = np.array([curiosity_objective(x, r, alpha, beta, horizon) for x in pts])
        if scheme == "parameter":
            second = vals[:-2] - 2.0 * vals[1:-1] + vals[2:]
            worst = max(worst, float(second.max()))
        else:
            for a in range(grid_points - 1):
                mid = GeodesicSpec(pts[a], pts[a + 1], alpha, normalized=True)(0.5)
                short = 0.5 * (vals[a] + vals[a + 1]) - curiosity_objective(mid, r, alpha, beta, horizon)
                worst = max(worst, float(short))
    return worst
