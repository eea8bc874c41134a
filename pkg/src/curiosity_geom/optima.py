"""Maximisers of the curiosity objective over the whole simplex.

The objective is ``R(p) = (n+1) sum_s p_s (r_s + beta I_alpha(s; p))``.  Its
maximiser has the closed form

    p_s  propto  (nu - r_s)^(-2/(alpha+1)),     nu > max r      (alpha > -1)
    p_s  propto  exp(r_s / beta)                                (alpha = -1)
    p_s  propto  (r_s - nu)_+^(-2/(alpha+1))                    (alpha < -1)

where the scalar ``nu`` is fixed by normalisation.  It is found by a
bracketed root search here and cross-checked against a generic simplex
ascent that knows nothing about this form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp

from ._utils import as_distribution, make_rng
from .geometry import GeodesicSpec, alpha_divergence, fisher_norm, fisher_rao_inner
from .information import alpha_information_generator, alpha_information_value


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimaProblem:
    reward: np.ndarray
    alpha: float
    beta: float
    horizon: int = 0

    def __post_init__(self):
        r = np.asarray(self.reward, dtype=float)
        if r.ndim != 1 or r.size < 1 or not np.all(np.isfinite(r)):
            raise ValueError("reward must be a finite 1-D vector")
        if float(self.alpha) == 1.0:
            raise ValueError("alpha-information diverges at alpha=1")
        if not self.beta >= 0:
            raise ValueError("beta must be >= 0")
        object.__setattr__(self, "reward", r)

    @property
    def dim(self) -> int:
        return self.reward.size

    @property
    def uniform(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)

    def with_beta(self, beta: float) -> "OptimaProblem":
        return OptimaProblem(self.reward, self.alpha, beta, self.horizon)


def _reward_is_constant(r: np.ndarray) -> bool:
    return float(np.ptp(r)) <= 1e-14 * max(1.0, float(np.abs(r).max()))


def objective(p, prob: OptimaProblem) -> float:
    """``(n+1) sum p (r + beta I_alpha(p))`` with ``0 log 0 = 0`` on the alpha = -1 branch."""
    p = as_distribution(p)
    if p.shape != prob.reward.shape:
        raise ValueError("dimension mismatch")
    pos = p > 0
    info = np.zeros_like(p)
    if prob.beta > 0:
        info[pos] = alpha_information_value(p[pos], prob.alpha)
    bonus = float(np.sum(p[pos] * info[pos]))
    return float((prob.horizon + 1) * (p @ prob.reward + prob.beta * bonus))


# -- closed form -------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedFormSolution:
    p: np.ndarray
    multiplier: float
    """Stationarity constant ``nu`` in ``r_s + beta d/dp(p I) = nu``; nan for the limit conventions."""
    normalization_residual: float
    """``|sum of the unnormalised stationary point - 1|`` (the self-consistency condition)."""


def closed_form_solution(prob: OptimaProblem) -> ClosedFormSolution:
    r, a, beta, d = prob.reward, float(prob.alpha), float(prob.beta), prob.dim
    if _reward_is_constant(r):
        return ClosedFormSolution(prob.uniform, float("nan"), 0.0)
    if beta == 0.0:
        p = np.zeros(d)
        p[int(np.argmax(r))] = 1.0
        return ClosedFormSolution(p, float("nan"), 0.0)
    rmax = float(r.max())
    gap = rmax - r
    if a == -1.0:
        logw = r / beta
        p = np.exp(logw - logsumexp(logw))
        # r_s - beta (log p_s + 1) is the same for every s
        nu = float(np.mean(r - beta * (np.log(p) + 1.0)))
        return ClosedFormSolution(p, nu, 0.0)

    expo = -2.0 / (1.0 + a)
    if a > -1.0:
        scale = (1.0 + a) / (2.0 * beta)

        def unnormalised(x):
            return (scale * (x + gap)) ** expo

        lo = 1.0 / scale
        hi = d ** ((1.0 + a) / 2.0) / scale
    else:
        scale = -(1.0 + a) / (2.0 * beta)

        def unnormalised(x):
            return np.maximum(scale * (x - gap), 0.0) ** expo

        lo, hi = 0.0, 1.0 / scale

    def excess(x):
        return float(np.sum(unnormalised(x))) - 1.0

    f_lo, f_hi = excess(lo), excess(hi)
    if a > -1.0 and not (f_lo >= 0.0 >= f_hi):
        raise ConvergenceError(f"no real multiplier in bracket [{lo}, {hi}] (excess {f_lo}, {f_hi})")
    if a < -1.0 and not (f_lo <= 0.0 <= f_hi):
        raise ConvergenceError(f"no real multiplier in bracket [{lo}, {hi}] (excess {f_lo}, {f_hi})")
    if f_lo == 0.0:
        x = lo
    elif f_hi == 0.0:
        x = hi
    else:
        x = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    w = unnormalised(x)
    total = float(w.sum())
    nu = rmax + x if a > -1.0 else rmax - x
    return ClosedFormSolution(w / total, float(nu), abs(total - 1.0))


def closed_form_optimum(prob: OptimaProblem) -> np.ndarray:
    """Closed-form maximiser over the simplex (see module docstring)."""
    return closed_form_solution(prob).p


def gibbs_optimum(reward, temperature: float) -> np.ndarray:
    """``softmax(r / temperature)``, the entropy-regularised optimum."""
    logw = np.asarray(reward, dtype=float) / temperature
    return np.exp(logw - logsumexp(logw))


# -- brute-force oracle ------------------------------------------------------------


@dataclass
class NumericalOptimum:
    p: np.ndarray
    value: float
    residual: float
    iterations: int
    start_spread: float = 0.0
    all_starts: list = field(default_factory=list, repr=False)


def _per_state_terms(p, r, beta, gen):
    """Gradient ``r + beta (f(1/p) - f'(1/p)/p)`` and diagonal Hessian ``beta f''(1/p)/p^3``."""
    x = 1.0 / p
    g = r + beta * (gen(x) - gen.deriv(x) * x)
    h = beta * gen.second(x) * x**3
    return g, h


def _value(p, r, beta, gen):
    return float(p @ r + beta * np.sum(p * gen(1.0 / p)))


def _ascend(q0, r, beta, gen, lb, tol, max_iter):
    """Diagonally preconditioned multiplicative ascent on ``p = lb + s q``, ``q`` in the simplex."""
    s = 1.0 - lb.sum()
    q = q0.copy()
    p = lb + s * q
    val = _value(p, r, beta, gen)
    residual = np.inf
    for it in range(1, max_iter + 1):
        g, h = _per_state_terms(p, r, beta, gen)
        gq = s * g
        hq = s * s * h
        gbar = float(q @ gq)
        # complementary slackness on the support plus dual feasibility off it:
        # a collapsed coordinate whose gain beats the average is not optimal
        kkt = np.sum(q * np.abs(gq - gbar)) + float(np.max(gq - gbar, initial=0.0))
        residual = float(kkt / max(1.0, abs(gbar)))
        if residual <= tol:
            return q, val, residual, it
        w = 1.0 / np.maximum(-hq, 1e-300)
        # coordinates that have collapsed onto the boundary cannot give up
        # mass; they stay out of the Newton step unless their marginal gain
        # exceeds the multiplier, in which case they rejoin and grow
        active = q > 1e-14
        nu = float(np.sum(w[active] * gq[active]) / np.sum(w[active]))
        active |= gq > nu
        nu = float(np.sum(w[active] * gq[active]) / np.sum(w[active]))
        delta = np.where(active, w * (gq - nu), 0.0)
        slope = float(gq @ delta)
        eta = 1.0
        accepted = False
        while eta >= 1e-12:
            # growth is capped per iteration so nearly-empty coordinates
            # re-enter gradually instead of swallowing all of the mass
            z = np.clip(eta * delta / q, -50.0, 2.0)
            q_new = q * np.exp(z - z.max())
            q_new /= q_new.sum()
            q_new = np.maximum(q_new, 1e-300)
            p_new = lb + s * q_new
            val_new = _value(p_new, r, beta, gen)
            if not np.isfinite(val_new):
                eta *= 0.5
                continue
            # once the predicted gain is at rounding level the objective
            # cannot rank steps, so the full Newton step is taken
            if val_new >= val + 1e-4 * eta * slope or slope <= 1e-13 * max(1.0, abs(val)):
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            # no ascent step left: accept only if already stationary to rounding
            return q, val, residual, it
        q, p, val = q_new, p_new, val_new
    return q, val, residual, max_iter


def maximize_on_simplex(reward, beta: float, generator, floor=None, tol: float = 1e-10,
                        starts: int = 10, seed: int = 0, max_iter: int = 100_000) -> NumericalOptimum:
    """Maximise ``sum p (r + beta f(1/p))`` for a concave ``f`` from random interior starts.

    ``floor`` optionally gives per-state lower bounds, used when only
    occupancies above a floor are achievable.  The best start is kept;
    ``start_spread`` is its largest L1 distance to any other start's result.
    The reported value has no horizon factor.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = np.asarray(reward, dtype=float)
    d = r.size
    lb = np.zeros(d) if floor is None else np.asarray(floor, dtype=float)
    if lb.shape != (d,) or np.any(lb < 0) or lb.sum() >= 1.0:
        raise ValueError("floor must be non-negative with total mass below 1")
    if beta == 0.0:
        p = lb.copy()
        p[int(np.argmax(r))] += 1.0 - lb.sum()
        return NumericalOptimum(p, float(p @ r), 0.0, 0)
    rng = make_rng(seed)
    results = []
    for _ in range(starts):
        q0 = rng.dirichlet(np.ones(d))
        q0 = np.maximum(q0, 1e-3)
        q0 /= q0.sum()
        q, val, res, its = _ascend(q0, r, beta, generator, lb, tol, max_iter)
        results.append((val, res, its, lb + (1.0 - lb.sum()) * q))
    val, res, its, p = max(results, key=lambda t: t[0])
    spread = max(float(np.abs(p - other[3]).sum()) for other in results)
    if res > tol:
        raise ConvergenceError(f"simplex ascent stalled with residual {res:.3e} after {its} iterations")
    return NumericalOptimum(p, val, res, its, spread, [t[3] for t in results])


def solve_numerical(prob: OptimaProblem, tol: float = 1e-10, starts: int = 10, seed: int = 0,
                    floor=None, max_iter: int = 100_000) -> NumericalOptimum:
    """Brute-force maximiser of :func:`objective` (value includes the ``n+1`` factor)."""
    gen = alpha_information_generator(prob.alpha)
    out = maximize_on_simplex(prob.reward, prob.beta, gen, floor, tol, starts, seed, max_iter)
    out.value *= prob.horizon + 1
    return out


def numerical_optimum(prob: OptimaProblem, tol: float = 1e-10, starts: int = 10, seed: int = 0) -> np.ndarray:
    return solve_numerical(prob, tol=tol, starts=starts, seed=seed).p


# -- divergence minimisation on the iso-return hyperplane ---------------------------


def _divergence_to_uniform_terms(p, alpha, d):
    """Gradient and diagonal Hessian of ``p -> D_alpha(p || u)``."""
    u = 1.0 / d
    if alpha == -1.0:
        return np.log(p / u) + 1.0, 1.0 / p
    if alpha == 1.0:
        return 1.0 - u / p, u / p**2
    m = (1.0 + alpha) / 2.0
    grad = -(2.0 / (1.0 + alpha)) * (u / p) ** m
    hess = u**m * p ** (-m - 1.0)
    return grad, hess


def constrained_divergence_minimum(reward, alpha: float, target_return: float,
                                   tol: float = 1e-13, max_iter: int = 500) -> np.ndarray:
    """``argmin D_alpha(p || u)`` subject to ``sum p = 1`` and ``sum p r = target_return``.

    Newton's method in the affine constraint set, started from a feasible
    mixture of the uniform point and the best vertex.
    """
    r = np.asarray(reward, dtype=float)
    d = r.size
    u = np.full(d, 1.0 / d)
    if _reward_is_constant(r):
        return u
    mean_r, rmax = float(r.mean()), float(r.max())
    t = (target_return - mean_r) / (rmax - mean_r)
    if not 0.0 <= t < 1.0:
        raise ConvergenceError(f"target return {target_return} has no interior feasible point")
    vertex = np.zeros(d)
    vertex[int(np.argmax(r))] = 1.0
    p = (1.0 - t) * u + t * vertex
    constraints = np.vstack([np.ones(d), r])

    def fval(x):
        return alpha_divergence(x, u, alpha)

    val = fval(p)
    for _ in range(max_iter):
        g, h = _divergence_to_uniform_terms(p, alpha, d)
        hinv = 1.0 / h
        a_h = constraints * hinv
        w = np.linalg.solve(a_h @ constraints.T, -(a_h @ g))
        step = -hinv * (g + constraints.T @ w)
        decrement = float(-(g @ step))
        if decrement <= tol * max(1.0, abs(val)):
            break
        eta = 1.0
        neg = step < 0
        if np.any(neg):
            eta = min(1.0, 0.99 * float(np.min(-p[neg] / step[neg])))
        while eta > 1e-14:
            cand = p + eta * step
            cval = fval(cand)
            if np.all(cand > 0) and cval <= val - 1e-4 * eta * decrement:
                break
            eta *= 0.5
        else:
            break
        p, val = cand, cval
    else:
        raise ConvergenceError("constrained divergence minimisation did not converge")
    return p


@dataclass(frozen=True)
class EquivalenceReport:
    closed_form: np.ndarray
    constrained: np.ndarray
    target_return: float
    distance: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.distance <= self.tolerance


def divergence_min_equivalence(prob: OptimaProblem, tol: float = 1e-5) -> EquivalenceReport:
    """Compare the optimum with the closest point to ``u`` on its own iso-return hyperplane."""
    p_star = closed_form_optimum(prob)
    c = float(p_star @ prob.reward)
    q = constrained_divergence_minimum(prob.reward, prob.alpha, c)
    dist = float(np.abs(p_star - q).sum())
    return EquivalenceReport(p_star, q, (prob.horizon + 1) * c, dist, tol)


# -- geometric characterisations ------------------------------------------------------


def projection_orthogonality(prob: OptimaProblem, p=None) -> float:
    """Largest normalised Fisher-Rao inner product between the projection geodesic and the hyperplane.

    The geodesic of order ``-alpha`` runs from ``u`` to the optimum; its
    velocity at the optimum is paired with a basis of the iso-return tangent
    space ``{v : sum v = 0, sum v r = 0}``.  Constant rewards give 0.
    """
    r = prob.reward
    if _reward_is_constant(r):
        return 0.0
    p_star = closed_form_optimum(prob) if p is None else as_distribution(p)
    if np.any(p_star <= 0):
        raise ValueError("optimum is not interior")
    geo = GeodesicSpec(prob.uniform, p_star, -float(prob.alpha), normalized=False)
    vel = geo.raw_velocity(1.0)
    basis = null_space(np.vstack([np.ones(prob.dim), r]))
    if basis.shape[1] == 0:
        return 0.0
    nv = fisher_norm(p_star, vel)
    worst = 0.0
    for v in basis.T:
        val = abs(fisher_rao_inner(p_star, vel, v)) / (nv * fisher_norm(p_star, v))
        worst = max(worst, val)
    return worst


@dataclass
class SweepResult:
    alpha: float
    betas: np.ndarray
    points: np.ndarray
    residuals: np.ndarray
    fitted_t: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(self.residuals.max()) if self.residuals.size else 0.0


def trade_off_geodesic(p0, prob: OptimaProblem) -> GeodesicSpec:
    """Normalised order-``(alpha + 2)`` geodesic from ``p0`` to the uniform point."""
    return GeodesicSpec(p0, prob.uniform, float(prob.alpha) + 2.0, normalized=True)


def fit_geodesic_parameter(geo: GeodesicSpec, target) -> tuple[float, float]:
    """``t`` in [0, 1] minimising the L1 distance from ``geo(t)`` to ``target``, and that distance."""
    target = np.asarray(target, dtype=float)

    def dist(t):
        return float(np.abs(geo(t) - target).sum())

    res = minimize_scalar(dist, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": 1e-10, "maxiter": 2000})
    t = float(res.x)
    best = min((dist(t), t), (dist(0.0), 0.0), (dist(1.0), 1.0))
    return best[1], best[0]


def beta_sweep(prob: OptimaProblem, betas) -> SweepResult:
    """Optima along a beta grid and their distance to the trade-off geodesic.

    The geodesic starts at the optimum for the smallest beta and ends at
    ``u``; every other optimum is fitted to it by a 1-D search over ``t``.
    """
    betas = np.asarray(betas, dtype=float)
    if betas.size < 3 or np.any(betas <= 0) or np.any(np.diff(betas) <= 0):
        raise ValueError("betas must be at least 3 strictly increasing positive values")
    points = np.array([closed_form_optimum(prob.with_beta(b)) for b in betas])
    residuals = np.zeros(betas.size)
    fitted = np.zeros(betas.size)
    if not _reward_is_constant(prob.reward):
        geo = trade_off_geodesic(points[0], prob)
        for j in range(1, betas.size):
            fitted[j], residuals[j] = fit_geodesic_parameter(geo, points[j])
    return SweepResult(float(prob.alpha), betas, points, residuals, fitted)


def sweep_rows(result: SweepResult, reward, horizon: int = 0):
    """Rows ``(alpha, beta, state, probability, return_value, divergence_to_uniform, geodesic_residual)``."""
    r = np.asarray(reward, dtype=float)
    u = np.full(r.size, 1.0 / r.size)
    for b, p, res in zip(result.betas, result.points, result.residuals):
        ret = float((horizon + 1) * p @ r)
        div = alpha_divergence(p, u, result.alpha)
        for s, ps in enumerate(p):
            yield (result.alpha, float(b), s, float(ps), ret, div, float(res))
