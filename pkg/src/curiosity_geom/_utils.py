"""Shared validation, RNG and file helpers."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

SIMPLEX_ATOL = 1e-10


def as_distribution(x, name: str = "p", atol: float = SIMPLEX_ATOL) -> np.ndarray:
    """Return ``x`` as a float array after checking it lies on the simplex."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    bad = np.flatnonzero(arr < 0)
    if bad.size:
        raise ValueError(f"{name}[{bad[0]}] = {arr[bad[0]]} is negative")
    total = arr.sum()
    if abs(total - 1.0) > atol:
        raise ValueError(f"{name} sums to {total!r}, not 1")
    return arr


def as_positive(x, name: str = "q", strict: bool = True) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    bad = np.flatnonzero(arr <= 0) if strict else np.flatnonzero(arr < 0)
    if bad.size:
        kind = "positive" if strict else "non-negative"
        raise ValueError(f"{name}[{bad[0]}] = {arr[bad[0]]} is not {kind}")
    return arr


def same_shape(*arrays: np.ndarray) -> None:
    shapes = {a.shape for a in arrays}
    if len(shapes) > 1:
        raise ValueError(f"dimension mismatch: {sorted(shapes)}")


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based (Philox) generator for ``seed`` and an optional spawn path.

    Different ``keys`` give statistically independent streams, so a trial or
    episode index can be mixed in without coordinating with other callers.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def random_interior(rng: np.random.Generator, d: int, concentration: float = 1.0) -> np.ndarray:
    """Dirichlet draw kept away from the boundary (every weight >= 1e-6)."""
    p = rng.dirichlet(np.full(d, concentration))
    p = np.maximum(p, 1e-6)
    return p / p.sum()


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
