"""Hypothesis strategies for points on the simplex."""
import numpy as np
from hypothesis import strategies as st


@st.composite
def interior_distributions(draw, min_dim=2, max_dim=8, dim=None, floor=1e-3):
    d = dim if dim is not None else draw(st.integers(min_dim, max_dim))
    w = draw(st.lists(st.floats(floor, 1.0), min_size=d, max_size=d))
    w = np.asarray(w)
    return w / w.sum()


@st.composite
def distribution_pairs(draw, min_dim=2, max_dim=8, floor=1e-3):
    d = draw(st.integers(min_dim, max_dim))
    p = draw(interior_distributions(dim=d, floor=floor))
    q = draw(interior_distributions(dim=d, floor=floor))
    return p, q


def rewards(min_dim=2, max_dim=8):
    return st.integers(min_dim, max_dim).flatmap(
        lambda d: st.lists(st.floats(-1.0, 1.0), min_size=d, max_size=d).map(np.asarray)
    )
