"""Data-processing checks for f-information returns under state aggregation.

A statistic merges source states into cells.  The pushed-forward occupancy
carries the cell sums, and the reference measure carries the cell sizes
(the image of the counting measure), so the intrinsic return of a cell ``y``
is ``p_y f(size_y / p_y)``.  For concave ``f`` merging can only raise the
return, with equality exactly when the occupancy is constant on every cell.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ._utils import as_distribution, make_rng, random_interior
from .geometry import FGenerator, custom_generator, has_curvature
from .information import alpha_information_generator


@dataclass(frozen=True)
class Statistic:
    """Surjective map from ``len(mapping)`` source states onto ``0..num_targets-1``."""

    mapping: tuple

    def __post_init__(self):
        m = tuple(int(x) for x in self.mapping)
        if not m:
            raise ValueError("statistic needs at least one source state")
        if min(m) < 0:
            raise ValueError("target indices must be non-negative")
        missing = sorted(set(range(max(m) + 1)) - set(m))
        if missing:
            raise ValueError(f"target {missing[0]} has an empty fiber")
        object.__setattr__(self, "mapping", m)

    @property
    def num_sources(self) -> int:
        return len(self.mapping)

    @property
    def num_targets(self) -> int:
        return max(self.mapping) + 1

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.mapping, minlength=self.num_targets).astype(float)

    def fibers(self) -> list[np.ndarray]:
        idx = np.asarray(self.mapping)
        return [np.flatnonzero(idx == y) for y in range(self.num_targets)]

    def then(self, outer: "Statistic") -> "Statistic":
        """Composition ``outer o self``."""
        if outer.num_sources != self.num_targets:
            raise ValueError("statistics do not compose")
        return Statistic(tuple(outer.mapping[y] for y in self.mapping))

    @classmethod
    def identity(cls, d: int) -> "Statistic":
        return cls(tuple(range(d)))

    @classmethod
    def merge_all(cls, d: int) -> "Statistic":
        return cls((0,) * d)

    @classmethod
    def random(cls, rng: np.random.Generator, d: int, num_targets: int | None = None) -> "Statistic":
        """Uniformly shuffled surjection; ``num_targets`` defaults to a random value in ``1..d``."""
        k = int(rng.integers(1, d + 1)) if num_targets is None else int(num_targets)
        if not 1 <= k <= d:
            raise ValueError("need 1 <= num_targets <= d")
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=d - k)])
        rng.shuffle(labels)
        return cls(tuple(int(x) for x in labels))


def pushforward(p, kappa: Statistic) -> tuple[np.ndarray, np.ndarray]:
    """Cell sums of ``p`` and cell sizes."""
    p = as_distribution(p)
    if p.size != kappa.num_sources:
        raise ValueError(f"dimension mismatch: p has {p.size} states, statistic {kappa.num_sources}")
    weights = np.bincount(kappa.mapping, weights=p, minlength=kappa.num_targets)
    return weights, kappa.sizes


def intrinsic_return(p, sizes, f: FGenerator, n: int = 0) -> float:
    """``(n+1) sum_y p_y f(size_y / p_y)``; an empty cell contributes its limit ``size f'(inf)``."""
    p = as_distribution(p)
    sizes = np.asarray(sizes, dtype=float)
    if sizes.shape != p.shape:
        raise ValueError("sizes must match p")
    pos = p > 0
    total = float(np.sum(p[pos] * f(sizes[pos] / p[pos])))
    empty = (~pos) & (sizes > 0)
    if np.any(empty):
        with np.errstate(invalid="ignore"):
            total += float(np.sum(sizes[empty] * f.deriv(np.inf)))
    return (n + 1) * total


def dpi_gap(p, kappa: Statistic, f: FGenerator, n: int = 0, check: bool = True) -> float:
    """Return after aggregation minus return before; non-negative for concave ``f``.

    ``check=False`` skips the concavity test so that counterexamples with
    convex generators can be evaluated.
    """
    if check and not has_curvature(f, concave=True):
        raise ValueError("dpi_gap needs a strictly concave generator")
    p = as_distribution(p)
    coarse, sizes = pushforward(p, kappa)
    return intrinsic_return(coarse, sizes, f, n) - intrinsic_return(p, np.ones_like(p), f, n)


def sufficiency_check(p, kappa: Statistic, tol: float = 1e-10) -> bool:
    """True when ``p`` is constant (within ``tol``) on every fiber of ``kappa``."""
    p = as_distribution(p)
    if p.size != kappa.num_sources:
        raise ValueError("dimension mismatch")
    return all(float(np.ptp(p[fib])) <= tol for fib in kappa.fibers())


def fiber_constant(rng: np.random.Generator, kappa: Statistic) -> np.ndarray:
    """Random occupancy that is constant on every fiber of ``kappa``."""
    cell = random_interior(rng, kappa.num_targets)
    per_state = cell / kappa.sizes
    return per_state[np.asarray(kappa.mapping)]


def square_generator() -> FGenerator:
    """The convex ``x^2 - 1``, used to show the inequality needs concavity."""
    return custom_generator(lambda x: x * x - 1.0, lambda x: 2.0 * x, 2.0, lambda x: 2.0 + 0.0 * x,
                            concave=False, label="x^2-1")


DEFAULT_ALPHAS = (-1.0, 0.0, 0.5)


@dataclass
class DpiReport:
    trials: int
    min_gap: float
    equality_cases: int
    """Trials (random plus constructed) where the gap vanished within the equality tolerance."""
    equality_mismatches: int
    """Trials where 'gap vanished' and 'statistic is sufficient' disagree."""
    composition_violations: int
    counterexample: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (self.min_gap >= -1e-12 and self.equality_mismatches == 0
                and self.composition_violations == 0 and self.counterexample is not None)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def dpi_battery(trials: int = 1000, seed: int = 0, alphas=DEFAULT_ALPHAS, max_states: int = 8,
                constructed: int = 100, equality_tol: float = 1e-10,
                counterexample_trials: int = 200) -> DpiReport:
    """Random-trial verification of the inequality, its equality case and its failure for convex ``f``.

    Source spaces have at least 3 states.  Trial ``i`` draws from its own
    derived stream so that trials can be reordered or split freely.
    """
    gens = [alpha_information_generator(a) for a in alphas]
    min_gap = np.inf
    eq_cases = mismatches = comp_bad = 0
    for i in range(trials):
        rng = make_rng(seed, 1, i)
        d = int(rng.integers(3, max_states + 1))
        p = random_interior(rng, d)
        kappa = Statistic.random(rng, d)
        f = gens[i % len(gens)]
        gap = dpi_gap(p, kappa, f)
        min_gap = min(min_gap, gap)
        vanished = gap <= equality_tol
        eq_cases += vanished
        mismatches += vanished != sufficiency_check(p, kappa)
        outer = Statistic.random(rng, kappa.num_targets)
        if dpi_gap(p, kappa.then(outer), f) < gap - 1e-12:
            comp_bad += 1
    for i in range(constructed):
        rng = make_rng(seed, 2, i)
        d = int(rng.integers(3, max_states + 1))
        kappa = Statistic.random(rng, d)
        p = fiber_constant(rng, kappa)
        gap = dpi_gap(p, kappa, gens[i % len(gens)])
        min_gap = min(min_gap, gap)
        vanished = abs(gap) <= equality_tol
        eq_cases += vanished
        mismatches += vanished != sufficiency_check(p, kappa)
    witness = convex_counterexample(seed, counterexample_trials)
    return DpiReport(trials + constructed, float(min_gap), int(eq_cases), int(mismatches), int(comp_bad),
                     witness, {"alphas": list(map(float, alphas)), "equality_tol": equality_tol})


def convex_counterexample(seed: int = 0, trials: int = 200, threshold: float = -1e-6) -> dict | None:
    """First sampled ``(p, kappa)`` where ``x^2 - 1`` gives a gap below ``threshold``."""
    f = square_generator()
    for i in range(trials):
        rng = make_rng(seed, 3, i)
        d = int(rng.integers(3, 7))
        p = random_interior(rng, d)
        kappa = Statistic.random(rng, d, int(rng.integers(1, d)))
        gap = dpi_gap(p, kappa, f, check=False)
        if gap < threshold:
            return {"p": p.tolist(), "mapping": list(kappa.mapping), "gap": gap, "generator": f.label}
    return None
