import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from curiosity_geom._utils import make_rng, random_interior
from curiosity_geom.geometry import (
    GeodesicSpec,
    alpha_divergence,
    alpha_generator,
    custom_generator,
    divergence_gradient,
    f_divergence,
    fisher_norm,
    fisher_rao_inner,
    geodesic_eval,
    geodetic_alignment,
    kl_divergence,
    renyi_divergence,
    renyi_from_alpha,
    renyi_gradient,
)

from _strategies import distribution_pairs, interior_distributions

P_HALF = np.array([0.5, 0.5])
Q_QUARTER = np.array([0.25, 0.75])


def direct_kl(p, q):
    return float(sum(a * np.log(a / b) for a, b in zip(p, q) if a > 0))


# -- divergences -------------------------------------------------------------------


@given(interior_distributions(), st.sampled_from([-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]))
def test_alpha_divergence_vanishes_on_diagonal(p, a):
    assert alpha_divergence(p, p, a) == pytest.approx(0.0, abs=1e-12)


def test_alpha_minus_one_is_kl_example():
    val = alpha_divergence(P_HALF, Q_QUARTER, -1.0)
    assert val == pytest.approx(direct_kl(P_HALF, Q_QUARTER), rel=1e-14)
    assert val == pytest.approx(0.143841, abs=1e-6)


def test_alpha_plus_one_is_reverse_kl():
    assert alpha_divergence(P_HALF, Q_QUARTER, 1.0) == pytest.approx(direct_kl(Q_QUARTER, P_HALF), rel=1e-14)


@given(distribution_pairs())
def test_alpha_zero_is_twice_squared_hellinger(pq):
    p, q = pq
    hell = float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))
    assert alpha_divergence(p, q, 0.0) == pytest.approx(2.0 * hell, rel=1e-10, abs=1e-14)


def test_alpha_zero_disjoint_support():
    # the alpha family fixes the factor at 4/(1-0) = 4, i.e. twice the plain Hellinger sum of 2
    assert alpha_divergence([1.0, 0.0], [0.0, 1.0], 0.0) == pytest.approx(4.0)


def test_divergent_alpha_reports_inf():
    assert alpha_divergence([0.5, 0.5], [1.0, 0.0], -1.0) == np.inf
    assert alpha_divergence([1.0, 0.0], [0.5, 0.5], 1.0) == np.inf
    assert alpha_divergence([0.5, 0.5], [1.0, 0.0], -2.0) == np.inf


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError, match="dimension"):
        alpha_divergence([0.5, 0.5], [0.2, 0.3, 0.5], 0.0)


@given(distribution_pairs(floor=1e-2))
def test_limit_branches_match_kl(pq):
    p, q = pq
    assert abs(alpha_divergence(p, q, -1 + 1e-5) - kl_divergence(p, q)) <= 1e-4
    assert abs(alpha_divergence(p, q, 1 - 1e-5) - kl_divergence(q, p)) <= 1e-4


@given(distribution_pairs())
def test_alpha_zero_symmetric(pq):
    p, q = pq
    assert alpha_divergence(p, q, 0.0) == pytest.approx(alpha_divergence(q, p, 0.0), rel=1e-12, abs=1e-15)


def test_kl_asymmetry_witness():
    assert abs(alpha_divergence(P_HALF, Q_QUARTER, -1.0) - alpha_divergence(Q_QUARTER, P_HALF, -1.0)) > 1e-3


@given(distribution_pairs(), st.sampled_from([-2.0, -0.5, 0.0, 0.5, 0.9, 3.0]))
def test_f_divergence_agrees_with_alpha_divergence(pq, a):
    p, q = pq
    assert f_divergence(p, q, alpha_generator(a)) == pytest.approx(alpha_divergence(p, q, a), rel=1e-10, abs=1e-12)


@given(distribution_pairs())
def test_f_divergence_minus_one_branch_is_kl(pq):
    p, q = pq
    assert f_divergence(p, q, alpha_generator(-1.0)) == pytest.approx(direct_kl(p, q), rel=1e-10, abs=1e-13)


def test_f_divergence_rejects_concave_generator():
    with pytest.raises(ValueError, match="convex"):
        f_divergence(P_HALF, Q_QUARTER, alpha_generator(0.0).negated())


def test_custom_generator_validation():
    with pytest.raises(ValueError, match="f\\(1\\)"):
        custom_generator(lambda x: x * x, lambda x: 2 * x, 2.0)
    with pytest.raises(ValueError, match="convex"):
        custom_generator(lambda x: np.log(x), lambda x: 1 / x, -1.0)


def test_renyi_examples():
    assert renyi_divergence(P_HALF, P_HALF, 2.0) == pytest.approx(0.0, abs=1e-15)
    assert renyi_divergence(P_HALF, Q_QUARTER, 2.0) == pytest.approx(np.log(4.0 / 3.0), rel=1e-14)
    assert renyi_divergence(P_HALF, Q_QUARTER, 2.0) == pytest.approx(0.287682, abs=1e-6)


@given(distribution_pairs())
def test_renyi_half_is_bhattacharyya(pq):
    p, q = pq
    assert renyi_divergence(p, q, 0.5) == pytest.approx(-2 * np.log(np.sum(np.sqrt(p * q))), rel=1e-10, abs=1e-14)


@given(distribution_pairs(), st.sampled_from([0.3, 0.5, 2.0]))
def test_renyi_is_monotone_in_alpha_divergence(pq, lam):
    p, q = pq
    d = alpha_divergence(p, q, 1.0 - 2.0 * lam)
    assert renyi_from_alpha(d, lam) == pytest.approx(renyi_divergence(p, q, lam), rel=1e-10, abs=1e-12)


def test_renyi_pairing_with_order_two_lambda_minus_one_fails_off_the_midpoint():
    # documents the pairing convention: only lambda = 1/2 is self-dual
    lam = 2.0
    wrong = renyi_from_alpha(alpha_divergence(P_HALF, Q_QUARTER, 2 * lam - 1), lam)
    assert abs(wrong - renyi_divergence(P_HALF, Q_QUARTER, lam)) > 0.05


# -- geodesics ---------------------------------------------------------------------


@given(distribution_pairs(), st.sampled_from([-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0]), st.booleans())
def test_geodesic_endpoints(pq, order, normalized):
    p, q = pq
    geo = GeodesicSpec(p, q, order, normalized=normalized)
    np.testing.assert_allclose(geodesic_eval(geo, 0.0), p, atol=1e-10)
    np.testing.assert_allclose(geodesic_eval(geo, 1.0), q, atol=1e-10)


def test_mixture_midpoint():
    geo = GeodesicSpec([0.6, 0.4], [0.2, 0.8], -1.0)
    np.testing.assert_allclose(geo(0.5), [0.4, 0.6], atol=1e-15)


def test_square_root_geodesic_by_hand():
    geo = GeodesicSpec([0.64, 0.36], [0.16, 0.04], 0.0, normalized=False)
    np.testing.assert_allclose(geo(0.5), [0.36, 0.16], atol=1e-15)


def test_log_affine_limit():
    p, q = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.3, 0.1])
    geo = GeodesicSpec(p, q, 1.0, normalized=False)
    np.testing.assert_allclose(geo(0.25), p**0.75 * q**0.25, rtol=1e-14)


@given(distribution_pairs(), st.sampled_from([-3.0, -0.5, 0.0, 0.5, 0.9]))
def test_power_coordinates_are_affine(pq, order):
    p, q = pq
    geo = GeodesicSpec(p, q, order, normalized=False)
    ts = np.linspace(0, 1, 9)
    coords = np.array([geo.raw(t) ** geo.power for t in ts])
    second = coords[:-2] - 2 * coords[1:-1] + coords[2:]
    assert np.abs(second).max() <= 1e-8 * np.abs(coords).max()


def test_zero_weight_endpoint_needs_clamp():
    with pytest.raises(ValueError, match="clamp"):
        GeodesicSpec([1.0, 0.0], [0.5, 0.5], 0.0)
    geo = GeodesicSpec([1.0, 0.0], [0.5, 0.5], 0.0, clamp=True)
    assert np.all(geo(0.5) > 0)
    np.testing.assert_allclose(GeodesicSpec([1.0, 0.0], [0.5, 0.5], -1.0)(0.5), [0.75, 0.25])


def test_geodesic_parameter_range():
    geo = GeodesicSpec(P_HALF, Q_QUARTER, 0.0)
    with pytest.raises(ValueError):
        geodesic_eval(geo, 1.5)


@given(distribution_pairs(), st.sampled_from([-1.0, 0.0, 0.5]), st.floats(0.05, 0.95))
def test_velocity_matches_finite_difference(pq, order, t):
    p, q = pq
    geo = GeodesicSpec(p, q, order, normalized=True)
    h = 1e-6
    fd = (geo(t + h) - geo(t - h)) / (2 * h)
    np.testing.assert_allclose(geo.velocity(t), fd, atol=1e-6)


# -- metric, gradients, alignment ---------------------------------------------------


def test_fisher_rao_examples():
    assert fisher_rao_inner(P_HALF, [1, -1], [1, -1]) == pytest.approx(4.0)
    d = 5
    u = np.full(d, 1.0 / d)
    v = np.zeros(d)
    v[0], v[1] = 0.3, -0.3
    assert fisher_rao_inner(u, v, v) == pytest.approx(2 * d * 0.09)
    with pytest.raises(ValueError):
        fisher_rao_inner([1.0, 0.0], [1, -1], [1, -1])
    with pytest.raises(ValueError, match="tangent"):
        fisher_rao_inner(P_HALF, [1, 1], [1, -1], simplex=True)


@given(interior_distributions(dim=4), st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_fisher_rao_symmetric(q, vw):
    v, w = np.array(vw[:4]), np.array(vw[4:])
    assert fisher_rao_inner(q, v, w) == pytest.approx(fisher_rao_inner(q, w, v), rel=1e-14, abs=1e-14)


def euclidean_gradient_fd(p, q, f, h=1e-6):
    g = np.zeros_like(q)
    for i in range(q.size):
        e = np.zeros_like(q)
        e[i] = h
        g[i] = (f_divergence(p, q + e, f) - f_divergence(p, q - e, f)) / (2 * h)
    return g


def test_divergence_gradient_matches_finite_differences():
    rng = make_rng(7)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 7))
        p, q = random_interior(rng, d, 3.0), random_interior(rng, d, 3.0)
        f = alpha_generator(0.3)
        raised = q * euclidean_gradient_fd(p, q, f)
        g = divergence_gradient(p, q, f)
        worst = max(worst, np.abs(g - raised).max() / np.abs(g).max())
    assert worst <= 1e-6


@given(interior_distributions(), st.sampled_from([-0.5, 0.0, 0.5, 2.0]))
def test_gradient_at_diagonal(q, a):
    g = divergence_gradient(q, q, alpha_generator(a))
    np.testing.assert_allclose(g, -(2.0 / (1.0 - a)) * q, rtol=1e-12)


@given(distribution_pairs())
def test_kl_branch_gradient(pq):
    p, q = pq
    # D(p||q) = sum p log(p/q) - p + q has Euclidean gradient 1 - p/q in q
    np.testing.assert_allclose(divergence_gradient(p, q, alpha_generator(-1.0)), q * (1 - p / q) - q, atol=1e-12)


@given(distribution_pairs(min_dim=3), st.sampled_from([-2.0, -1.0, -0.5, 0.0, 0.3, 0.5, 1.0, 2.0]))
def test_alpha_divergences_are_geodetic(pq, a):
    p, q = pq
    assume(np.abs(p - q).max() > 1e-6)
    assert abs(geodetic_alignment(p, q, alpha_generator(a), a)) >= 1 - 1e-8


@given(distribution_pairs(min_dim=3), st.sampled_from([0.3, 0.5, 2.0]))
def test_renyi_is_geodetic_with_dual_order(pq, lam):
    p, q = pq
    assume(np.abs(p - q).max() > 1e-6)
    cos = geodetic_alignment(p, q, lambda a, b: renyi_gradient(a, b, lam), 1.0 - 2.0 * lam)
    assert abs(cos) >= 1 - 1e-8


def test_renyi_gradient_is_metric_gradient():
    rng = make_rng(3)
    p, q = random_interior(rng, 4, 2.0), random_interior(rng, 4, 2.0)
    h = 1e-6
    fd = np.array([(renyi_divergence(p, q + h * e, 2.0) - renyi_divergence(p, q - h * e, 2.0)) / (2 * h)
                   for e in np.eye(4)])
    np.testing.assert_allclose(renyi_gradient(p, q, 2.0), q * fd, rtol=1e-6)


def test_exp_generator_is_not_geodetic_for_any_order():
    f = custom_generator(lambda x: np.exp(x - 1) - x, lambda x: np.exp(x - 1) - 1, 1.0, lambda x: np.exp(x - 1))
    rng = make_rng(11)
    pairs = [(random_interior(rng, 5, 5.0), random_interior(rng, 5, 5.0)) for _ in range(100)]
    for a in np.linspace(-5, 15, 21):
        assert min(abs(geodetic_alignment(p, q, f, a)) for p, q in pairs) < 1 - 1e-3


def test_alignment_undefined_at_equal_points():
    with pytest.raises(ValueError, match="p == q"):
        geodetic_alignment(P_HALF, P_HALF, alpha_generator(0.0), 0.0)


@given(distribution_pairs(min_dim=3))
def test_affine_generator_shift_does_not_change_alignment(pq):
    p, q = pq
    assume(np.abs(p - q).max() > 1e-6)
    base = alpha_generator(0.5)
    shifted = custom_generator(lambda x: base(x) + 0.7 * (x - 1), lambda x: base.deriv(x) + 0.7, 1.0,
                               base.d2f, check=False)
    assert geodetic_alignment(p, q, shifted, 0.5) == pytest.approx(geodetic_alignment(p, q, base, 0.5), abs=1e-10)


def test_fisher_norm_positive():
    assert fisher_norm(P_HALF, [0.1, -0.1]) > 0
