"""f-information, alpha-information and intrinsic reward vectors.

``I_f(s; p) = f(1 / p_s)`` for a strictly concave ``f`` with ``f(1) = 0``.
The alpha family uses ``4/(1-a^2) (x^((a+1)/2) - 1)``, which is ``log x``
at ``a = -1`` so that ``I_-1`` is the Shannon surprisal.  Entropies are in nats.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from ._utils import as_distribution
from .geometry import FGenerator, alpha_generator, has_curvature


def alpha_information_generator(alpha: float) -> FGenerator:
    """Concave generator of alpha-information (the negated ``f_alpha``)."""
    if float(alpha) == 1.0:
        raise ValueError("alpha-information diverges at alpha=1")
    return alpha_generator(alpha).negated()


def _information_value(p_s: float, f: FGenerator) -> float:
    if p_s < 0:
        raise ValueError(f"negative probability {p_s}")
    if p_s == 0:
        # limit of f(x) as x -> inf
        return float(f(np.inf))
    return float(f(1.0 / p_s))


def f_information(p, s: int, f: FGenerator) -> float:
    """f-information ``f(1 / p_s)`` of state ``s``."""
    p = as_distribution(p)
    return _information_value(float(p[s]), f)


def alpha_information(p, s: int, alpha: float) -> float:
    """Alpha-information of state ``s``; ``alpha = -1`` is ``-log p_s``."""
    p = as_distribution(p)
    return alpha_information_value(float(p[s]), alpha)


def alpha_information_value(p_s, alpha: float):
    """Alpha-information of a probability (or density) value, vectorised over ``p_s``."""
    a = float(alpha)
    if a == 1.0:
        raise ValueError("alpha-information diverges at alpha=1")
    x = np.asarray(p_s, dtype=float)
    if np.any(x < 0):
        raise ValueError("negative probability")
    with np.errstate(divide="ignore", over="ignore"):
        if a == -1.0:
            out = -np.log(x)
        else:
            out = 4.0 / (1.0 - a * a) * ((1.0 / x) ** ((a + 1.0) / 2.0) - 1.0)
    return float(out) if out.ndim == 0 else out


def information_vector(p, f: FGenerator) -> np.ndarray:
    """``f(1 / p_s)`` for every state; zero-probability entries take the ``x -> inf`` limit."""
    p = as_distribution(p)
    out = np.empty_like(p)
    pos = p > 0
    out[pos] = f(1.0 / p[pos])
    out[~pos] = float(f(np.inf))
    return out


def shannon_entropy(p) -> float:
    """Shannon entropy in nats, ``0 log 0 = 0``."""
    p = as_distribution(p)
    return float(np.sum(entr(p)))


@dataclass(frozen=True)
class RewardSpec:
    """Extrinsic reward plus a ``beta``-weighted f-information bonus.

    With ``adjust`` the total reward is divided by ``|f''(1)|`` so that the
    objective is consistent with the metric the generator induces.
    """

    extrinsic: np.ndarray
    beta: float
    generator: FGenerator
    adjust: bool = False

    def __post_init__(self):
        r = np.asarray(self.extrinsic, dtype=float)
        if r.ndim != 1 or not np.all(np.isfinite(r)):
            raise ValueError("extrinsic reward must be a finite 1-D vector")
        object.__setattr__(self, "extrinsic", r)
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not has_curvature(self.generator, concave=True):
            raise ValueError("information generator must be strictly concave")

    @classmethod
    def alpha(cls, extrinsic, beta: float, alpha: float, adjust: bool = False) -> "RewardSpec":
        return cls(np.asarray(extrinsic, dtype=float), beta, alpha_information_generator(alpha), adjust)


def intrinsic_reward_vector(p, spec: RewardSpec) -> np.ndarray:
    """``r_s + beta f(1/p_s)``, divided by ``|f''(1)|`` when ``spec.adjust`` is set."""
    p = as_distribution(p)
    if p.shape != spec.extrinsic.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {spec.extrinsic.shape}")
    bad = np.flatnonzero(p <= 0)
    if bad.size:
        raise ValueError(
            f"occupancy[{bad[0]}] = {p[bad[0]]} is not positive; smooth or clamp the occupancy first"
        )
    out = spec.extrinsic + spec.beta * spec.generator(1.0 / p)
    if spec.adjust:
        out = out / spec.generator.metric_scale
    return out


def count_bonus_identity(counts, total: int) -> tuple[np.ndarray, np.ndarray]:
    """0-information from normalised counts next to ``sqrt(16 (n+1) / n(s)) - 4``.

    ``total`` is the number of visited states ``n + 1``.  Returns both vectors.
    """
    c = np.asarray(counts)
    if c.ndim != 1 or not np.issubdtype(c.dtype, np.integer):
        raise ValueError("counts must be a 1-D integer vector")
    if np.any(c < 1):
        raise ValueError("every count must be >= 1; information is undefined at p = 0")
    if int(c.sum()) != int(total):
        raise ValueError(f"counts sum to {int(c.sum())}, expected total {total}")
    p = c / float(total)
    from_occupancy = alpha_information_value(p, 0.0)
    from_counts = np.sqrt(16.0 * total / c) - 4.0
    return np.asarray(from_occupancy, dtype=float), from_counts
