"""k-nearest-neighbour occupancy density estimates for sampled continuous states."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from ._utils import make_rng
from .information import alpha_information_value


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray

    def __post_init__(self):
        x = np.array(self.points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 2:
            raise ValueError("need an N x D sample matrix with N >= 2")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples contain non-finite coordinates")
        x.setflags(write=False)
        object.__setattr__(self, "points", x)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def load_samples(path: str | Path) -> SampleSet:
    """Read a CSV with one point per row; a non-numeric first row is treated as a header."""
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    try:
        [float(v) for v in text[0].split(",")]
        start = 0
    except ValueError:
        start = 1
    return SampleSet(np.loadtxt(text[start:], delimiter=",", ndmin=2))


def default_k(n: int) -> int:
    return int(math.ceil(math.sqrt(n)))


def ball_volume(radius, dim: int):
    """Volume of the ``dim``-ball, ``pi^(D/2) / Gamma(D/2 + 1) r^D``."""
    log_unit = 0.5 * dim * math.log(math.pi) - gammaln(0.5 * dim + 1.0)
    return np.exp(log_unit) * np.asarray(radius, dtype=float) ** dim


@dataclass(frozen=True)
class DensityEstimate:
    density: np.ndarray
    radius: np.ndarray
    degenerate: np.ndarray
    """True where the k-th neighbour distance is 0 (duplicates), making the density infinite."""


def knn_radii(samples: SampleSet, queries, k: int, exclude_self: bool = False, chunk: int = 2048) -> np.ndarray:
    """Distance from each query to its ``k``-th nearest sample (brute force, closed-ball ties).

    With ``exclude_self`` the queries must be the samples themselves and each
    point's own zero distance is skipped (leave-one-out).
    """
    q = np.asarray(queries, dtype=float)
    if q.ndim == 1:
        q = q[None, :] if samples.dim > 1 or q.size == 1 else q[:, None]
    if q.shape[1] != samples.dim:
        raise ValueError(f"query dimension {q.shape[1]} != sample dimension {samples.dim}")
    limit = samples.size - 1
    if not 1 <= k <= limit:
        raise ValueError(f"need 1 <= k < N (k={k}, N={samples.size})")
    kk = k + 1 if exclude_self else k
    x = samples.points
    sq = np.einsum("ij,ij->i", x, x)
    out = np.empty(q.shape[0])
    for lo in range(0, q.shape[0], chunk):
        block = q[lo:lo + chunk]
        d2 = np.einsum("ij,ij->i", block, block)[:, None] + sq[None, :] - 2.0 * block @ x.T
        if exclude_self:
            d2[np.arange(block.shape[0]), np.arange(lo, lo + block.shape[0])] = -1.0
        kth = np.partition(d2, kk - 1, axis=1)[:, kk - 1]
        out[lo:lo + chunk] = np.sqrt(np.maximum(kth, 0.0))
    return out


def knn_estimate(samples: SampleSet, queries, k: int | None = None, exclude_self: bool = False) -> DensityEstimate:
    k = default_k(samples.size) if k is None else int(k)
    radius = knn_radii(samples, queries, k, exclude_self)
    n_eff = samples.size - 1 if exclude_self else samples.size
    vol = ball_volume(radius, samples.dim)
    degenerate = radius == 0.0
    with np.errstate(divide="ignore"):
        dens = np.where(degenerate, np.inf, k / (n_eff * np.where(degenerate, 1.0, vol)))
    return DensityEstimate(dens, radius, degenerate)


def knn_density(samples: SampleSet, query, k: int | None = None) -> float:
    """``k / (N V_D(r_k))`` at a single query point; ``inf`` if ``r_k = 0``."""
    q = np.asarray(query, dtype=float).reshape(1, -1)
    return float(knn_estimate(samples, q, k).density[0])


def estimated_information(samples: SampleSet, query, k: int | None, alpha: float) -> float:
    """Alpha-information of the estimated density at ``query``."""
    return float(alpha_information_value(knn_density(samples, query, k), alpha))


# -- consistency measurements ----------------------------------------------------

SYNTHETIC = ("uniform_box", "gaussian")


def _draw(kind: str, rng: np.random.Generator, n: int, dim: int):
    if kind == "uniform_box":
        return rng.uniform(0.0, 1.0, size=(n, dim))
    if kind == "gaussian":
        return rng.normal(size=(n, dim))
    raise ValueError(f"unknown generator {kind!r}; choose from {SYNTHETIC}")


def _true_log_density(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "uniform_box":
        return np.zeros(x.shape[0])
    dim = x.shape[1]
    return -0.5 * np.sum(x * x, axis=1) - 0.5 * dim * math.log(2 * math.pi)


def _interior_queries(kind: str, rng: np.random.Generator, n: int, dim: int):
    """Query points away from the support boundary (box: [0.2, 0.8]^D, Gaussian: radius <= 1)."""
    if kind == "uniform_box":
        return rng.uniform(0.2, 0.8, size=(n, dim))
    x = rng.normal(size=(n, dim))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.where(norms > 1.0, x / norms, x)


@dataclass
class ConsistencyReport:
    generator: str
    dim: int
    sizes: list
    ks: list
    mean_abs_log_error: list
    max_rel_error: list
    inversions: int
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def decreasing(self) -> bool:
        """Errors decrease in N, tolerating one inversion from sampling noise."""
        return self.inversions <= 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def estimator_consistency_report(generator: str = "uniform_box", sizes=(100, 1000, 10000), dim: int = 1,
                                 k_rule=default_k, seed: int = 0, queries: int = 200) -> ConsistencyReport:
    """Mean absolute log-density error at interior queries for each sample size."""
    errs, rels, ks = [], [], []
    for j, n in enumerate(sizes):
        rng = make_rng(seed, 31, j)
        samples = SampleSet(_draw(generator, rng, int(n), dim))
        q = _interior_queries(generator, rng, queries, dim)
        k = int(k_rule(int(n)))
        est = knn_estimate(samples, q, k)
        truth = _true_log_density(generator, q)
        log_err = np.abs(np.log(est.density) - truth)
        errs.append(float(log_err.mean()))
        rels.append(float(np.max(np.abs(est.density / np.exp(truth) - 1.0))))
        ks.append(k)
    inversions = int(sum(b >= a for a, b in zip(errs, errs[1:])))
    return ConsistencyReport(generator, dim, [int(n) for n in sizes], ks, errs, rels, inversions, seed)


def grid_uniform_check(n: int = 10_000, k: int | None = None, queries=None) -> np.ndarray:
    """Estimates at interior queries from an even grid on [0, 1] (true density 1)."""
    grid = (np.arange(n) + 0.5) / n
    samples = SampleSet(grid[:, None])
    q = np.linspace(0.1, 0.9, 81) if queries is None else np.asarray(queries, dtype=float)
    return knn_estimate(samples, q[:, None], k).density
