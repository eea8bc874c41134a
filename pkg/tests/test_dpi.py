import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curiosity_geom._utils import make_rng
from curiosity_geom.dpi import (
    Statistic,
    convex_counterexample,
    dpi_battery,
    dpi_gap,
    fiber_constant,
    intrinsic_return,
    pushforward,
    square_generator,
    sufficiency_check,
)
from curiosity_geom.information import alpha_information_generator

from _strategies import interior_distributions


def test_hand_computed_gap():
    p = np.array([0.5, 0.3, 0.2])
    kappa = Statistic((0, 1, 1))
    before = 4 * (np.sqrt(0.5) - 0.5) + 4 * (np.sqrt(0.3) - 0.3) + 4 * (np.sqrt(0.2) - 0.2)
    after = 4 * (np.sqrt(0.5) - 0.5) + 0.5 * 4 * (np.sqrt(2 / 0.5) - 1)
    assert dpi_gap(p, kappa, alpha_information_generator(0.0)) == pytest.approx(after - before, abs=1e-14)
    assert after - before > 0.02


def test_identity_and_sufficient_statistics_have_zero_gap():
    f = alpha_information_generator(-1.0)
    p = np.array([0.5, 0.25, 0.25])
    assert dpi_gap(p, Statistic.identity(3), f) == 0.0
    assert abs(dpi_gap(p, Statistic((0, 1, 1)), f)) <= 1e-15
    assert sufficiency_check(p, Statistic((0, 1, 1)))
    assert not sufficiency_check(p, Statistic((0, 0, 1)))


def test_merge_all_of_uniform_is_sufficient():
    for a in (-1.0, 0.0, 0.5):
        assert abs(dpi_gap(np.full(5, 0.2), Statistic.merge_all(5), alpha_information_generator(a))) <= 1e-14


def test_pushforward_and_horizon_factor():
    weights, sizes = pushforward([0.1, 0.2, 0.3, 0.4], Statistic((1, 0, 1, 2)))
    np.testing.assert_allclose(weights, [0.2, 0.4, 0.4])
    np.testing.assert_array_equal(sizes, [1, 2, 1])
    f = alpha_information_generator(0.5)
    base = intrinsic_return(weights, sizes, f)
    assert intrinsic_return(weights, sizes, f, n=4) == pytest.approx(5 * base)


def test_empty_cell_uses_limit():
    f = alpha_information_generator(-3.0)
    # p f(1/p) -> f'(inf) = 0 for alpha = -3 as p -> 0, so an empty cell adds size * 0
    assert intrinsic_return([1.0, 0.0], [1.0, 2.0], f) == pytest.approx(0.0, abs=1e-15)


@given(interior_distributions(min_dim=3), st.integers(0, 10_000), st.sampled_from([-2.0, -1.0, -0.5, 0.0, 0.5]))
def test_gap_is_nonnegative(p, seed, a):
    kappa = Statistic.random(make_rng(seed), p.size)
    assert dpi_gap(p, kappa, alpha_information_generator(a)) >= -1e-12


@given(st.integers(3, 8), st.integers(0, 10_000), st.sampled_from([-1.0, 0.0, 0.5]))
def test_equality_iff_fiber_constant(d, seed, a):
    rng = make_rng(seed)
    kappa = Statistic.random(rng, d)
    f = alpha_information_generator(a)
    p = fiber_constant(rng, kappa)
    assert abs(dpi_gap(p, kappa, f)) <= 1e-12
    if kappa.num_targets < d:
        q = p * np.exp(0.3 * rng.standard_normal(d))
        q /= q.sum()
        assert sufficiency_check(q, kappa) == (dpi_gap(q, kappa, f) <= 1e-10)


@given(interior_distributions(min_dim=3), st.integers(0, 10_000))
def test_coarser_statistic_has_larger_gap(p, seed):
    rng = make_rng(seed)
    inner = Statistic.random(rng, p.size)
    outer = Statistic.random(rng, inner.num_targets)
    f = alpha_information_generator(-0.5)
    assert dpi_gap(p, inner.then(outer), f) >= dpi_gap(p, inner, f) - 1e-12


def test_statistic_validation():
    with pytest.raises(ValueError, match="empty fiber"):
        Statistic((0, 2, 2))
    with pytest.raises(ValueError, match="compose"):
        Statistic((0, 1)).then(Statistic((0, 0, 0)))
    with pytest.raises(ValueError, match="dimension"):
        dpi_gap([0.5, 0.5], Statistic((0, 0, 0)), alpha_information_generator(0.0))


def test_convex_generator_is_rejected_and_can_fail():
    with pytest.raises(ValueError, match="concave"):
        dpi_gap([0.2, 0.3, 0.5], Statistic((0, 0, 1)), square_generator())
    # with x^2 - 1 each cell contributes size^2 / p_y - p_y
    gap = dpi_gap([0.2, 0.3, 0.5], Statistic((0, 0, 1)), square_generator(), check=False)
    after = (4 / 0.5 - 0.5) + (1 / 0.5 - 0.5)
    before = (1 / 0.2 + 1 / 0.3 + 1 / 0.5) - 1.0
    assert gap == pytest.approx(after - before, abs=1e-12)
    assert gap < 0
    witness = convex_counterexample(seed=0)
    assert witness is not None and witness["gap"] < -1e-6


def test_battery_passes_and_serialises():
    report = dpi_battery(trials=300, seed=1, constructed=30)
    assert report.passed
    assert report.trials == 330
    assert report.min_gap >= -1e-12
    assert report.equality_cases >= 30
    doc = json.loads(report.to_json())
    assert doc["equality_mismatches"] == 0 and doc["counterexample"]["generator"] == "x^2-1"


def test_battery_is_deterministic():
    a = dpi_battery(trials=50, seed=7, constructed=5)
    b = dpi_battery(trials=50, seed=7, constructed=5)
    assert a.to_json() == b.to_json()
