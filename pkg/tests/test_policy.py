import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curiosity_geom._utils import make_rng
from curiosity_geom.information import RewardSpec, alpha_information_generator
from curiosity_geom.mdp import occupancy, random_mdp, swap_mdp
from curiosity_geom.policy import (
    OptimizerState,
    SingularMetricError,
    SoftmaxPolicy,
    finite_difference_jacobian,
    geodesic_concavity_check,
    natural_direction,
    natural_step,
    objective_gradient,
    occupancy_jacobian,
    occupancy_of,
    optimize,
    policy_objective,
    pullback_metric,
    teleport_floor,
    teleport_oracle,
    teleport_problem,
    trace_csv,
)


def _random_setup(seed, d=4, m=3, n=5):
    rng = make_rng(seed)
    return random_mdp(rng, d, m, n), SoftmaxPolicy(rng.standard_normal((d, m)))


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_jacobian_matches_finite_differences(seed, n):
    mdp, sp = _random_setup(seed, n=n)
    jac = occupancy_jacobian(mdp, sp)
    fd = finite_difference_jacobian(mdp, sp)
    assert np.abs(jac - fd).max() <= 1e-7 * max(1.0, np.abs(fd).max())


def test_jacobian_degenerate_cases():
    mdp, sp = _random_setup(1, n=0)
    assert not occupancy_jacobian(mdp, sp).any()
    one = random_mdp(make_rng(2), 1, 3, 4)
    assert not occupancy_jacobian(one, SoftmaxPolicy.zeros(1, 3)).any()


def test_jacobian_columns_sum_to_zero():
    mdp, sp = _random_setup(3)
    np.testing.assert_allclose(occupancy_jacobian(mdp, sp).sum(axis=0), 0.0, atol=1e-14)


def test_occupancy_matches_mdp_module():
    mdp, sp = _random_setup(4)
    np.testing.assert_allclose(occupancy_of(mdp, sp), occupancy(mdp, sp.policy).dist, atol=1e-15)


@given(st.integers(0, 10_000), st.sampled_from([-1.0, -0.5, 0.0, 0.5]))
def test_metric_is_symmetric_psd(seed, a):
    mdp, sp = _random_setup(seed)
    g = pullback_metric(mdp, sp, alpha_information_generator(a))
    np.testing.assert_array_equal(g, g.T)
    assert np.linalg.eigvalsh(g).min() >= -1e-12 * max(1.0, np.abs(g).max())


def test_metric_scales_with_generator_curvature():
    mdp, sp = _random_setup(5)
    f = alpha_information_generator(0.0)
    np.testing.assert_allclose(pullback_metric(mdp, sp, f.scaled(2.0)), 2 * pullback_metric(mdp, sp, f), rtol=1e-13)
    # the information generators all have |f''(1)| = 1, so the metric does not depend on alpha
    np.testing.assert_allclose(pullback_metric(mdp, sp, alpha_information_generator(0.5)),
                               pullback_metric(mdp, sp, f), rtol=1e-13)


def test_metric_is_fisher_pullback():
    mdp, sp = _random_setup(6)
    g = pullback_metric(mdp, sp, alpha_information_generator(-1.0))
    v = make_rng(7).standard_normal(g.shape[0])
    dp = occupancy_jacobian(mdp, sp) @ v
    p = occupancy_of(mdp, sp)
    assert v @ g @ v == pytest.approx(float(np.sum(dp * dp / p)), rel=1e-12)


def test_gradient_matches_finite_differences():
    mdp, sp = _random_setup(8)
    spec = RewardSpec.alpha(make_rng(9).uniform(-1, 1, 4), 0.7, -0.5)
    grad = objective_gradient(mdp, sp, spec)
    theta, h = sp.flat(), 1e-6
    fd = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (policy_objective(mdp, SoftmaxPolicy((theta + e).reshape(4, 3)), spec)
                 - policy_objective(mdp, SoftmaxPolicy((theta - e).reshape(4, 3)), spec)) / (2 * h)
    np.testing.assert_allclose(grad, fd, atol=1e-7)


def test_large_damping_recovers_vanilla_direction():
    mdp, sp = _random_setup(10)
    spec = RewardSpec.alpha(np.linspace(-1, 1, 4), 0.5, 0.0)
    grad = objective_gradient(mdp, sp, spec)
    g = pullback_metric(mdp, sp, spec.generator)
    cosines = []
    for lam in (1e-2, 1.0, 1e2, 1e4):
        d = natural_direction(g, grad, lam)
        cosines.append(d @ grad / (np.linalg.norm(d) * np.linalg.norm(grad)))
    assert cosines[-1] > 1 - 1e-6
    assert np.all(np.diff(cosines) >= -1e-12)


def test_natural_direction_pseudo_inverse_and_singular_error():
    g = np.diag([2.0, 0.0])
    np.testing.assert_allclose(natural_direction(g, np.array([4.0, 0.0]), 0.0), [2.0, 0.0])
    with pytest.raises(SingularMetricError, match="damping"):
        natural_direction(g, np.array([1.0, 1.0]), 0.0)
    np.testing.assert_allclose(natural_direction(g, np.array([1.0, 1.0]), 1.0), [1 / 3, 1.0])


def test_zero_objective_leaves_logits_unchanged():
    mdp, sp = _random_setup(11)
    spec = RewardSpec.alpha(np.zeros(4), 0.0, 0.0)
    state = natural_step(mdp, OptimizerState(sp), spec, 1.0)
    np.testing.assert_array_equal(state.logits.logits, sp.logits)
    assert state.step == 0.0


def test_step_validation():
    mdp, sp = _random_setup(12)
    spec = RewardSpec.alpha(np.zeros(4), 1.0, 0.0)
    with pytest.raises(ValueError, match="step"):
        natural_step(mdp, OptimizerState(sp), spec, 0.0)
    with pytest.raises(ValueError, match="damping"):
        natural_step(mdp, OptimizerState(sp), spec, 1.0, damping=-1.0)
    with pytest.raises(ValueError, match="method"):
        optimize(mdp, spec, method="adam")


def test_ascent_is_monotone():
    mdp, _ = _random_setup(13)
    spec = RewardSpec.alpha(make_rng(14).uniform(-1, 1, 4), 0.3, 0.0)
    for method in ("natural", "vanilla"):
        run = optimize(mdp, spec, method=method, iterations=40)
        values = [row[1] for row in run.trace]
        assert np.all(np.diff(values) >= -1e-12)


@pytest.mark.parametrize("a", [-1.0, -0.5, 0.0, 0.5])
@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
def test_natural_ascent_reaches_teleport_oracle(a, beta):
    mdp = teleport_problem()
    spec = RewardSpec.alpha(mdp.reward, beta, a)
    oracle = teleport_oracle(spec, mdp.horizon)
    assert np.all(oracle.p >= teleport_floor(6, mdp.horizon) - 1e-15)
    run = optimize(mdp, spec, "natural", iterations=2000, target=oracle.value)
    assert run.reached is not None
    assert run.final.objective <= oracle.value + 1e-9


def test_teleport_oracle_is_achievable():
    mdp = teleport_problem()
    spec = RewardSpec.alpha(mdp.reward, 0.3, 0.0)
    oracle = teleport_oracle(spec, mdp.horizon)
    # a state-independent policy q realises u/(n+1) + n/(n+1) q
    n = mdp.horizon
    q = (oracle.p - 1 / (6 * (n + 1))) * (n + 1) / n
    sp = SoftmaxPolicy(np.tile(np.log(np.maximum(q, 1e-300)), (6, 1)))
    np.testing.assert_allclose(occupancy_of(mdp, sp), oracle.p, atol=1e-12)


def test_trace_csv_format():
    mdp = swap_mdp(3)
    run = optimize(mdp, RewardSpec.alpha(mdp.reward, 1.0, 0.0), iterations=3)
    lines = trace_csv(run.trace).splitlines()
    assert lines[0] == "iteration,objective,grad_norm,step,entropy_of_occupancy"
    assert len(lines) == len(run.trace) + 1


# -- geodesic concavity --------------------------------------------------------------


@pytest.mark.parametrize("a", [-1.0, -0.5, 0.0, 0.5])
@pytest.mark.parametrize("scheme", ["parameter", "midpoint"])
def test_concave_along_geodesics_when_curiosity_dominates(a, scheme):
    r = make_rng(30).uniform(-1, 1, 5)
    assert geodesic_concavity_check(r, a, 1e3 * np.abs(r).max(), trials=40, scheme=scheme) <= 1e-9


def test_gibbs_objective_concave_at_any_beta():
    r = make_rng(31).uniform(-1, 1, 5)
    for beta in (0.0, 0.1, 10.0):
        assert geodesic_concavity_check(r, -1.0, beta, trials=40) <= 1e-9


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_pure_reward_is_not_geodesically_concave(a):
    r = make_rng(32).uniform(-1, 1, 5)
    assert geodesic_concavity_check(r, a, 0.0, trials=40) > 1e-3


def test_concavity_scheme_validation():
    with pytest.raises(ValueError, match="scheme"):
        geodesic_concavity_check(np.zeros(3), 0.0, 1.0, scheme="chord")
