"""Divergences, the Fisher-Rao metric and alpha-geodesics on finite spaces.

Points are plain numpy vectors: a *distribution* sums to one, a *positive
measure* only needs strictly positive weights.  Tangent vectors at simplex
points are full-length vectors summing to zero.

Generators follow the ``f(1) = 0`` convention.  The convex alpha family is

    f_alpha(x) = 4 / (1 - alpha^2) * (1 - x^((alpha + 1) / 2)),

with the limits ``-log x`` at alpha = -1 and ``x log x`` at alpha = +1.
Every member has ``f''(1) = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import kl_div

from ._utils import as_distribution, as_positive, same_shape

Array = np.ndarray
ALPHA_EPS = 0.0  # exact equality selects the limit branches


def _is(alpha: float, value: float) -> bool:
    return abs(alpha - value) <= ALPHA_EPS


@dataclass(frozen=True)
class FGenerator:
    """A divergence / information generator with its first two derivatives.

    ``fpp1`` is ``f''(1)``.  ``kind`` is ``"alpha"`` for the built-in family
    (``alpha`` then holds the parameter) and ``"custom"`` otherwise.
    """

    f: Callable[[Array], Array]
    df: Callable[[Array], Array]
    fpp1: float
    d2f: Callable[[Array], Array] | None = None
    kind: str = "custom"
    alpha: float | None = None
    concave: bool = False
    label: str = field(default="", compare=False)

    def __call__(self, x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return self.f(np.asarray(x, dtype=float))

    def deriv(self, x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return self.df(np.asarray(x, dtype=float))

    def second(self, x):
        if self.d2f is None:
            raise ValueError(f"generator {self.label or self.kind} has no second derivative")
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return self.d2f(np.asarray(x, dtype=float))

    @property
    def metric_scale(self) -> float:
        """Scale of the Fisher-Rao metric induced by this generator, ``|f''(1)|``."""
        return abs(self.fpp1)

    def scaled(self, eta: float) -> "FGenerator":
        d2 = self.d2f
        return FGenerator(
            f=lambda x: eta * self.f(x),
            df=lambda x: eta * self.df(x),
            fpp1=eta * self.fpp1,
            d2f=None if d2 is None else (lambda x: eta * d2(x)),
            kind="custom",
            alpha=None,
            concave=self.concave if eta > 0 else not self.concave,
            label=f"{eta}*{self.label}",
        )

    def negated(self) -> "FGenerator":
        """The sign-flipped generator: convex divergence form <-> concave information form."""
        d2 = self.d2f
        return FGenerator(
            f=lambda x: -self.f(x),
            df=lambda x: -self.df(x),
            fpp1=-self.fpp1,
            d2f=None if d2 is None else (lambda x: -d2(x)),
            kind=self.kind,
            alpha=self.alpha,
            concave=not self.concave,
            label=f"-({self.label})",
        )


def alpha_generator(alpha: float) -> FGenerator:
    """Convex generator ``f_alpha`` of the alpha-divergence."""
    a = float(alpha)
    if _is(a, -1.0):
        return FGenerator(
            f=lambda x: -np.log(x),
            df=lambda x: -1.0 / x,
            fpp1=1.0,
            d2f=lambda x: 1.0 / x**2,
            kind="alpha", alpha=a, label="f_-1",
        )
    if _is(a, 1.0):
        return FGenerator(
            f=lambda x: np.where(x == 0, 0.0, x * np.log(np.where(x == 0, 1.0, x))),
            df=lambda x: np.log(x) + 1.0,
            fpp1=1.0,
            d2f=lambda x: 1.0 / x,
            kind="alpha", alpha=a, label="f_1",
        )
    c = 4.0 / (1.0 - a * a)
    e = (a + 1.0) / 2.0
    return FGenerator(
        f=lambda x: c * (1.0 - x**e),
        df=lambda x: -(2.0 / (1.0 - a)) * x ** (e - 1.0),
        fpp1=1.0,
        d2f=lambda x: x ** ((a - 3.0) / 2.0),
        kind="alpha", alpha=a, label=f"f_{a:g}",
    )


def custom_generator(f, df, fpp1: float, d2f=None, *, concave: bool = False,
                     label: str = "custom", check: bool = True) -> FGenerator:
    """Wrap user functions as a generator, checking ``f(1) = 0`` and the stated curvature sign."""
    gen = FGenerator(f=f, df=df, fpp1=float(fpp1), d2f=d2f, concave=concave, label=label)
    if check:
        f1 = float(gen(1.0))
        if abs(f1) > 1e-12:
            raise ValueError(f"generator {label!r} has f(1) = {f1}, expected 0")
        if not has_curvature(gen, concave):
            kind = "concave" if concave else "convex"
            raise ValueError(f"generator {label!r} is not strictly {kind} on the sampled grid")
    return gen


def has_curvature(gen: FGenerator, concave: bool) -> bool:
    """Spot-check strict convexity/concavity via slope differences on (0.05, 20)."""
    xs = np.geomspace(0.05, 20.0, 41)
    slopes = np.diff(gen(xs)) / np.diff(xs)
    curv = np.diff(slopes)
    return bool(np.all(curv < 0)) if concave else bool(np.all(curv > 0))


# -- divergences -----------------------------------------------------------


def kl_divergence(p, q) -> float:
    """Kullback-Leibler divergence extended to positive measures (``sum p log p/q - p + q``)."""
    p = as_positive(p, "p", strict=False)
    q = as_positive(q, "q", strict=False)
    same_shape(p, q)
    return float(np.sum(kl_div(p, q)))


def alpha_divergence(p, q, alpha: float) -> float:
    """Amari alpha-divergence ``D_alpha(p || q)``.

    Uses the positive-measure form

        4/(1-a^2) * sum[(1-a)/2 p + (1+a)/2 q - p^((1-a)/2) q^((1+a)/2)],

    which reduces to ``4/(1-a^2) (1 - sum p^((1-a)/2) q^((1+a)/2))`` on the
    simplex.  ``alpha = -1`` is ``KL(p||q)``, ``alpha = +1`` is ``KL(q||p)``.
    Divergent cases return ``inf``.
    """
    p = as_positive(p, "p", strict=False)
    q = as_positive(q, "q", strict=False)
    same_shape(p, q)
    a = float(alpha)
    if _is(a, -1.0):
        return float(np.sum(kl_div(p, q)))
    if _is(a, 1.0):
        return float(np.sum(kl_div(q, p)))
    ep, eq = (1.0 - a) / 2.0, (1.0 + a) / 2.0
    both_zero = (p == 0) & (q == 0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cross = np.where(both_zero, 0.0, p**ep * q**eq)
    if not np.all(np.isfinite(cross)):
        return float("inf")
    val = 4.0 / (1.0 - a * a) * np.sum(ep * p + eq * q - cross)
    return float(max(val, 0.0)) if np.isfinite(val) else float("inf")


def f_divergence(p, q, f: FGenerator) -> float:
    """``sum_s p_s f(q_s / p_s)`` for a convex generator ``f``."""
    p = as_positive(p, "p", strict=False)
    q = as_positive(q, "q", strict=False)
    same_shape(p, q)
    if f.concave:
        raise ValueError("f_divergence needs a convex generator; use f.negated()")
    bad = np.flatnonzero((p == 0) & (q > 0))
    if bad.size:
        raise ValueError(f"p[{bad[0]}] = 0 where q > 0: ratio undefined")
    mask = p > 0
    vals = f(q[mask] / p[mask])
    if not np.all(np.isfinite(vals)):
        return float("inf")
    return float(np.sum(p[mask] * vals))


def renyi_divergence(p, q, lam: float) -> float:
    """Renyi divergence ``1/(lam-1) log sum p^lam q^(1-lam)``; ``lam = 1`` is ``KL(p||q)``."""
    p = as_positive(p, "p", strict=False)
    q = as_positive(q, "q", strict=False)
    same_shape(p, q)
    lam = float(lam)
    if lam <= 0:
        raise ValueError("Renyi order must be positive")
    if lam == 1.0:
        return float(np.sum(kl_div(p, q)))
    mask = p > 0
    with np.errstate(divide="ignore", over="ignore"):
        terms = p[mask] ** lam * q[mask] ** (1.0 - lam)
    z = float(np.sum(terms))
    if not np.isfinite(z):
        return float("inf")
    if z == 0.0:
        return float("inf")
    return float(np.log(z) / (lam - 1.0))


def renyi_from_alpha(d_alpha: float, lam: float) -> float:
    """Monotone map ``1/(lam-1) log[1 + lam(lam-1) D]`` from an alpha-divergence value.

    With ``D = alpha_divergence(p, q, 1 - 2*lam)`` this equals
    ``renyi_divergence(p, q, lam)`` on the simplex.
    """
    lam = float(lam)
    if lam == 1.0:
        return float(d_alpha)
    arg = 1.0 + lam * (lam - 1.0) * d_alpha
    if arg <= 0:
        return float("inf")
    return float(np.log(arg) / (lam - 1.0))


# -- geodesics ---------------------------------------------------------------

CLAMP_FLOOR = 1e-12


@dataclass(frozen=True)
class GeodesicSpec:
    """Curve ``t -> {(1-t) p^k + t q^k}^(1/k)`` with ``k = (1 - order) / 2``.

    ``order = 1`` is the log-affine (exponential) limit, ``order = -1`` the
    mixture line.  With ``normalized`` the curve is rescaled onto the simplex.
    """

    p: Array
    q: Array
    order: float
    normalized: bool = True
    clamp: bool = False

    def __post_init__(self):
        p = as_positive(self.p, "p", strict=False)
        q = as_positive(self.q, "q", strict=False)
        same_shape(p, q)
        if float(self.order) > -1.0 and (np.any(p == 0) or np.any(q == 0)):
            if not self.clamp:
                raise ValueError("zero-weight endpoint for a geodesic of order > -1; set clamp=True")
            p = np.maximum(p, CLAMP_FLOOR)
            q = np.maximum(q, CLAMP_FLOOR)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def power(self) -> float:
        return (1.0 - float(self.order)) / 2.0

    def raw(self, t: float) -> Array:
        k = self.power
        if k == 0.0:
            return np.exp((1.0 - t) * np.log(self.p) + t * np.log(self.q))
        m = (1.0 - t) * self.p**k + t * self.q**k
        return m ** (1.0 / k)

    def raw_velocity(self, t: float) -> Array:
        k = self.power
        if k == 0.0:
            return self.raw(t) * (np.log(self.q) - np.log(self.p))
        m = (1.0 - t) * self.p**k + t * self.q**k
        return (1.0 / k) * m ** (1.0 / k - 1.0) * (self.q**k - self.p**k)

    def __call__(self, t: float) -> Array:
        g = self.raw(t)
        return g / g.sum() if self.normalized else g

    def velocity(self, t: float) -> Array:
        v = self.raw_velocity(t)
        if not self.normalized:
            return v
        g = self.raw(t)
        s = g.sum()
        return v / s - g * v.sum() / s**2


def geodesic_eval(spec: GeodesicSpec, t: float) -> Array:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t = {t} outside [0, 1]")
    return spec(t)


# -- metric and gradients -----------------------------------------------------


def fisher_rao_inner(q, v, w, simplex: bool = False) -> float:
    """Fisher-Rao inner product ``sum v w / q`` at the point ``q``."""
    q = as_positive(q, "q", strict=True)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    same_shape(q, v, w)
    if simplex:
        for name, vec in (("v", v), ("w", w)):
            if abs(vec.sum()) > 1e-9 * max(1.0, np.abs(vec).sum()):
                raise ValueError(f"{name} is not tangent to the simplex (sum = {vec.sum()})")
    return float(np.sum(v * w / q))


def fisher_norm(q, v) -> float:
    return float(np.sqrt(fisher_rao_inner(q, v, v)))


def divergence_gradient(p, q, f: FGenerator) -> Array:
    """Fisher-Rao gradient of ``q -> D_f(p || q)`` on positive measures: ``q f'(q/p)``."""
    p = as_positive(p, "p", strict=True)
    q = as_positive(q, "q", strict=True)
    same_shape(p, q)
    return q * f.deriv(q / p)


def renyi_gradient(p, q, lam: float) -> Array:
    """Fisher-Rao gradient of ``q -> D_lam(p || q)``, raised from the Euclidean gradient."""
    p = as_positive(p, "p", strict=True)
    q = as_positive(q, "q", strict=True)
    same_shape(p, q)
    lam = float(lam)
    if lam == 1.0:
        return -p
    ratio = (p / q) ** lam
    z = np.sum(q * ratio)
    return -q * ratio / z


def tangent_projection(q: Array, v: Array) -> Array:
    """Fisher-orthogonal projection of ``v`` onto the simplex tangent space at ``q``."""
    return v - v.sum() * q


def geodetic_alignment(p, q, gradient, alpha: float) -> float:
    """Fisher-Rao cosine between a divergence gradient at ``q`` and the order-``alpha`` geodesic.

    ``gradient`` is an :class:`FGenerator` or a callable ``(p, q) -> gradient``.
    Both vectors are projected onto the simplex tangent space at ``q`` first;
    this removes the ``c (x - 1)`` generator ambiguity, which only moves the
    gradient along ``q``.  The geodesic is the raw positive-measure curve
    from ``q`` towards ``p``.
    """
    p = as_distribution(p, "p")
    q = as_distribution(q, "q")
    same_shape(p, q)
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("geodetic alignment needs interior points")
    if np.allclose(p, q, rtol=0.0, atol=1e-15):
        raise ValueError("p == q: geodesic velocity is zero, cosine undefined")
    if isinstance(gradient, FGenerator):
        grad = divergence_gradient(p, q, gradient)
    else:
        grad = np.asarray(gradient(p, q), dtype=float)
    if not np.all(np.isfinite(grad)):
        raise ValueError("divergence gradient is not finite at this pair (generator overflow)")
    vel = GeodesicSpec(q, p, alpha, normalized=False).raw_velocity(0.0)
    a = tangent_projection(q, grad)
    b = tangent_projection(q, vel)
    na, nb = fisher_norm(q, a), fisher_norm(q, b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-length tangent vector, cosine undefined")
    return float(np.clip(fisher_rao_inner(q, a, b) / (na * nb), -1.0, 1.0))
