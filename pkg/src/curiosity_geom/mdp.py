"""Finite episodic MDPs: agent-environment kernel, occupancy and returns.

An episode visits ``n + 1`` states ``s_0 .. s_n``.  The occupancy is the
average state distribution over those steps,

    p = 1/(n+1) * sum_{k=0..n} mu^T M^k,

and it is also the state marginal of the stationary distribution of the
counter chain on ``S x {0..n}`` that resets to ``mu`` after step ``n``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._utils import SIMPLEX_ATOL, make_rng


class MdpValidationError(ValueError):
    """Raised when an MDP or policy violates a simplex invariant; names the offending index."""


def _check_rows(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise MdpValidationError(f"{name}{list(idx)} is not finite")
    neg = np.argwhere(arr < 0)
    if neg.size:
        idx = tuple(int(i) for i in neg[0])
        raise MdpValidationError(f"{name}{list(idx)} = {arr[idx]} is negative")
    sums = arr.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > SIMPLEX_ATOL)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise MdpValidationError(f"{name}{list(idx)} sums to {sums[idx]!r}, not 1")


@dataclass(frozen=True)
class FiniteMdp:
    """Tabular MDP with state rewards; ``transition[s, a]`` is a distribution over next states."""

    transition: np.ndarray
    start: np.ndarray
    reward: np.ndarray
    horizon: int
    name: str = "mdp"

    def __post_init__(self):
        tr = np.array(self.transition, dtype=float)
        mu = np.array(self.start, dtype=float)
        r = np.array(self.reward, dtype=float)
        if tr.ndim != 3 or tr.shape[0] != tr.shape[2]:
            raise MdpValidationError(f"transition must have shape (d, m, d), got {tr.shape}")
        d = tr.shape[0]
        if mu.shape != (d,):
            raise MdpValidationError(f"start must have shape ({d},), got {mu.shape}")
        if r.shape != (d,):
            raise MdpValidationError(f"reward must have shape ({d},), got {r.shape}")
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise MdpValidationError(f"horizon must be a non-negative integer, got {self.horizon}")
        _check_rows(tr, "transition")
        _check_rows(mu[None, :], "start")
        if not np.all(np.isfinite(r)):
            raise MdpValidationError(f"reward[{int(np.argmax(~np.isfinite(r)))}] is not finite")
        for name, val in (("transition", tr), ("start", mu), ("reward", r)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    def with_reward(self, reward) -> "FiniteMdp":
        return FiniteMdp(self.transition, self.start, reward, self.horizon, self.name)

    def to_dict(self) -> dict:
        return {
            "states": self.num_states,
            "actions": self.num_actions,
            "horizon": self.horizon,
            "start": self.start.tolist(),
            "reward": self.reward.tolist(),
            "transition": self.transition.tolist(),
        }


@dataclass(frozen=True)
class Policy:
    """Tabular stochastic policy, one action distribution per state."""

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2:
            raise MdpValidationError(f"policy table must be 2-D, got shape {t.shape}")
        _check_rows(t, "policy")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> "Policy":
        return cls(np.full((num_states, num_actions), 1.0 / num_actions))

    @classmethod
    def deterministic(cls, actions, num_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        table = np.zeros((actions.size, num_actions))
        table[np.arange(actions.size), actions] = 1.0
        return cls(table)


@dataclass(frozen=True)
class Occupancy:
    dist: np.ndarray
    horizon: int
    source: str = ""


def _check_policy(mdp: FiniteMdp, policy: Policy) -> None:
    if policy.table.shape != (mdp.num_states, mdp.num_actions):
        raise ValueError(
            f"policy shape {policy.table.shape} does not match MDP ({mdp.num_states}, {mdp.num_actions})"
        )


def agent_env_kernel(mdp: FiniteMdp, policy: Policy) -> np.ndarray:
    """State-to-state kernel ``M[s, s'] = sum_a pi(s, a) delta(s, a, s')``."""
    _check_policy(mdp, policy)
    return np.einsum("sa,sat->st", policy.table, mdp.transition)


def state_distributions(mdp: FiniteMdp, kernel: np.ndarray) -> np.ndarray:
    """Rows ``mu^T M^k`` for ``k = 0..n``."""
    out = np.empty((mdp.horizon + 1, mdp.num_states))
    x = mdp.start.copy()
    for k in range(mdp.horizon + 1):
        out[k] = x
        x = x @ kernel
    return out


def occupancy(mdp: FiniteMdp, policy: Policy) -> Occupancy:
    """Exact occupancy by summing kernel powers."""
    m = agent_env_kernel(mdp, policy)
    dist = state_distributions(mdp, m).mean(axis=0)
    return Occupancy(dist / dist.sum(), mdp.horizon, mdp.name)


def occupancy_return(occ: Occupancy | np.ndarray, r, horizon: int | None = None) -> float:
    """Return written through the occupancy, ``(n + 1) sum_s p_s r_s``."""
    if isinstance(occ, Occupancy):
        dist, n = occ.dist, occ.horizon
    else:
        if horizon is None:
            raise ValueError("horizon is required when passing a bare distribution")
        dist, n = np.asarray(occ, dtype=float), horizon
    r = np.asarray(r, dtype=float)
    if r.shape != dist.shape:
        raise ValueError(f"dimension mismatch: {dist.shape} vs {r.shape}")
    return float((n + 1) * dist @ r)


def _sample_rows(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """One categorical draw per row of ``probs`` by inverse CDF."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cdf[:, -1]
    idx = (u[:, None] >= cdf).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def simulate_states(mdp: FiniteMdp, policy: Policy, episodes: int, seed: int) -> np.ndarray:
    """Sample ``episodes`` trajectories; returns an ``(episodes, n + 1)`` array of states.

    Actions are drawn from the policy and next states from the transition
    tensor directly, so the simulation does not go through the state kernel.
    """
    _check_policy(mdp, policy)
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    rng = make_rng(seed)
    states = np.empty((episodes, mdp.horizon + 1), dtype=np.int64)
    s = _sample_rows(rng, np.broadcast_to(mdp.start, (episodes, mdp.num_states)))
    states[:, 0] = s
    for i in range(1, mdp.horizon + 1):
        a = _sample_rows(rng, policy.table[s])
        s = _sample_rows(rng, mdp.transition[s, a])
        states[:, i] = s
    return states


def empirical_occupancy(mdp: FiniteMdp, policy: Policy, episodes: int, seed: int) -> np.ndarray:
    """Normalised visit counts over ``(n + 1) * episodes`` sampled states."""
    states = simulate_states(mdp, policy, episodes, seed)
    counts = np.bincount(states.ravel(), minlength=mdp.num_states)
    return counts / counts.sum()


def rollout_return(mdp: FiniteMdp, policy: Policy, episodes: int, seed: int) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the undiscounted episode return."""
    if episodes < 2:
        raise ValueError("episodes must be >= 2 for a standard error")
    states = simulate_states(mdp, policy, episodes, seed)
    returns = mdp.reward[states].sum(axis=1)
    return float(returns.mean()), float(returns.std(ddof=1) / np.sqrt(episodes))


# -- counter chain -------------------------------------------------------------


def augmented_kernel(mdp: FiniteMdp, policy: Policy) -> np.ndarray:
    """Kernel on ``S x {0..n}``; index ``c * d + s``.  Counter ``n`` resets to ``(mu, 0)``."""
    m = agent_env_kernel(mdp, policy)
    d, n = mdp.num_states, mdp.horizon
    size = d * (n + 1)
    big = np.zeros((size, size))
    for c in range(n):
        big[c * d:(c + 1) * d, (c + 1) * d:(c + 2) * d] = m
    big[n * d:(n + 1) * d, 0:d] = mdp.start[None, :]
    return big


class PowerIterationError(RuntimeError):
    pass


def stationary_power_iteration(kernel: np.ndarray, init=None, tol: float = 1e-12,
                               max_sweeps: int = 1_000_000) -> tuple[np.ndarray, float, int]:
    """Stationary distribution of a row-stochastic ``kernel`` by power iteration.

    Iterates the lazy kernel ``(I + K) / 2``, which has the same stationary
    distributions but no periodicity (the counter chain has period ``n + 1``).
    Stops when ``||x K - x||_1 <= tol``.  Returns ``(x, residual, sweeps)``.
    """
    size = kernel.shape[0]
    x = np.full(size, 1.0 / size) if init is None else np.asarray(init, dtype=float).copy()
    x = x / x.sum()
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        xk = x @ kernel
        residual = float(np.abs(xk - x).sum())
        if residual <= tol:
            return x, residual, sweep
        x = 0.5 * (x + xk)
        x /= x.sum()
    raise PowerIterationError(f"power iteration did not converge in {max_sweeps} sweeps; residual {residual:.3e}")


def augmented_stationary(mdp: FiniteMdp, policy: Policy, init=None, tol: float = 1e-12) -> np.ndarray:
    """Stationary distribution of the counter chain, shape ``(n + 1) * d`` (counter-major)."""
    x, _, _ = stationary_power_iteration(augmented_kernel(mdp, policy), init=init, tol=tol)
    return x


def marginalize_counter(aug: np.ndarray, num_states: int) -> np.ndarray:
    return aug.reshape(-1, num_states).sum(axis=0)


# -- construction and file format -----------------------------------------------


def random_mdp(rng: np.random.Generator, d: int, m: int, n: int, concentration: float = 1.0) -> FiniteMdp:
    tr = rng.dirichlet(np.full(d, concentration), size=(d, m))
    mu = rng.dirichlet(np.full(d, concentration))
    r = rng.uniform(-1.0, 1.0, size=d)
    return FiniteMdp(tr, mu, r, n, name=f"random-{d}x{m}-n{n}")


def random_policy(rng: np.random.Generator, d: int, m: int) -> Policy:
    return Policy(rng.dirichlet(np.ones(m), size=d))


def swap_mdp(horizon: int = 1) -> FiniteMdp:
    """Two states, one action that always moves to the other state; starts in state 0."""
    tr = np.array([[[0.0, 1.0]], [[1.0, 0.0]]])
    return FiniteMdp(tr, [1.0, 0.0], [1.0, 0.0], horizon, name="swap")


def teleport_mdp(d: int, horizon: int, reward=None) -> FiniteMdp:
    """Action ``a`` moves to state ``a`` from anywhere; uniform start."""
    tr = np.broadcast_to(np.eye(d)[None, :, :], (d, d, d)).copy()
    r = np.zeros(d) if reward is None else reward
    return FiniteMdp(tr, np.full(d, 1.0 / d), r, horizon, name=f"teleport-{d}")


_FIELDS = ("states", "actions", "horizon", "start", "reward", "transition")


def parse_mdp(doc: dict, name: str = "mdp") -> FiniteMdp:
    """Build an MDP from the JSON document form, validating every field."""
    missing = [k for k in _FIELDS if k not in doc]
    if missing:
        raise MdpValidationError(f"missing field(s): {', '.join(missing)}")
    if "episode_lengths" in doc or isinstance(doc["horizon"], list):
        raise MdpValidationError("variable-length episodes are not supported; horizon must be one integer")
    d, m = doc["states"], doc["actions"]
    if not (isinstance(d, int) and d >= 1 and isinstance(m, int) and m >= 1):
        raise MdpValidationError("states and actions must be positive integers")
    try:
        tr = np.array(doc["transition"], dtype=float)
    except ValueError as exc:
        raise MdpValidationError(f"transition is ragged: {exc}") from None
    if tr.shape != (d, m, d):
        raise MdpValidationError(f"transition has shape {tr.shape}, expected {(d, m, d)}")
    if not isinstance(doc["horizon"], int):
        raise MdpValidationError("horizon must be an integer")
    return FiniteMdp(tr, doc["start"], doc["reward"], doc["horizon"], name=doc.get("name", name))


def load_mdp(path: str | Path) -> FiniteMdp:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MdpValidationError(f"{path}: not valid JSON ({exc})") from None
    return parse_mdp(doc, name=path.stem)


def dump_mdp(mdp: FiniteMdp) -> str:
    return json.dumps(mdp.to_dict(), indent=2)
