import numpy as np
import pytest
from scipy import stats

from saomquad.effects import EffectSpec, ParameterVector
from saomquad.estimation import (
    EstimationOptions,
    MoMResult,
    check_derivative,
    default_start,
    estimate,
    linear_combination_test,
    parameter_names,
    t_test,
    target_statistics,
    update_matrix,
    wald_test,
)
from saomquad.exceptions import ConfigurationError, DegenerateTestError, SingularDerivativeError
from saomquad.network import ActorCovariate, DirectedNetwork, NetworkPanel
from saomquad.simulation import SimOptions, simulate_panel

QUAD_NAMES = ["theta1", "theta2", "theta3", "theta4", "theta5"]


def _quad_result(theta, se):
    return MoMResult.from_estimates(QUAD_NAMES, theta, np.diag(np.square(se)))


def test_target_statistics_by_hand():
    w1 = DirectedNetwork.from_edges(4, [(0, 1)])
    w2 = DirectedNetwork.from_edges(4, [(0, 1), (1, 0), (2, 3)])
    w3 = DirectedNetwork.from_edges(4, [(1, 0), (2, 3), (3, 2), (3, 0)])
    panel = NetworkPanel((w1, w2, w3))
    effects = (EffectSpec("outdegree"), EffectSpec("reciprocity"))
    # outdegree: 3 + 4 ties, reciprocity: 2 + 2 ordered mutual pairs, Hamming: 2 and 3
    np.testing.assert_array_equal(target_statistics(panel, effects), [7, 4, 2, 3])
    assert parameter_names(effects, 2) == [
        "density", "recip", "rate period 1", "rate period 2"
    ]


def test_target_statistics_needs_two_waves():
    with pytest.raises(ValueError):
        target_statistics(NetworkPanel((DirectedNetwork.empty(3),)), ())


def test_default_start():
    w1 = DirectedNetwork.empty(10)
    w2 = DirectedNetwork.from_edges(10, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6),
                                         (6, 7), (7, 8), (8, 9)])
    theta = default_start(NetworkPanel((w1, w2)), (EffectSpec("outdegree"),))
    assert theta[0] == pytest.approx(np.log(0.1 / 0.9))
    assert theta[1] == 0.9


def test_options():
    assert EstimationOptions().gains().tolist() == [0.2, 0.1, 0.05, 0.025]
    with pytest.raises(ConfigurationError):
        EstimationOptions(diagonalize=1.5)
    with pytest.raises(ConfigurationError):
        EstimationOptions(phase1_runs=1)


def test_update_matrix():
    d = np.array([[2.0, 1.0], [0.5, 4.0]])
    np.testing.assert_allclose(update_matrix(d, 0.0), np.linalg.inv(d))
    np.testing.assert_allclose(update_matrix(d, 1.0), np.diag([0.5, 0.25]))


def test_t_test_example():
    res = _quad_result([-0.0288, -0.003, 0.044, -0.095, 0.026], [0.0073, 0.003, 0.01, 0.02, 0.01])
    t = t_test(res, "theta1")
    assert t.statistic == pytest.approx(-3.945, abs=1e-3)
    assert t.p_value == pytest.approx(2 * stats.norm.sf(3.945), rel=1e-3)
    assert t_test(res, 0) == t
    with pytest.raises(KeyError):
        t_test(res, "nope")


def test_wald_test_example():
    res = MoMResult.from_estimates(["a"], [np.sqrt(23.3)], np.eye(1))
    w = wald_test(res, ["a"])
    assert w.statistic == pytest.approx(23.3)
    cov = np.diag([1.0, 2.0, 3.0, 4.0, 5.0])
    theta = np.sqrt(23.3 / 5 * np.diag(cov))
    w5 = wald_test(MoMResult.from_estimates(QUAD_NAMES, theta, cov), QUAD_NAMES)
    assert w5.statistic == pytest.approx(23.3)
    assert w5.df == 5
    assert w5.p_value == pytest.approx(0.000296, abs=5e-6)


def test_wald_agrees_with_squared_t():
    res = _quad_result([0.3, -0.2, 0.1, 0.0, 0.5], [0.1, 0.2, 0.3, 0.4, 0.5])
    for k in range(5):
        assert wald_test(res, [k]).statistic == pytest.approx(t_test(res, k).statistic ** 2)
        assert wald_test(res, [k]).p_value == pytest.approx(t_test(res, k).p_value)


def test_wald_singular_submatrix():
    cov = np.ones((2, 2))
    res = MoMResult.from_estimates(["a", "b"], [1.0, 1.0], cov)
    with pytest.raises(DegenerateTestError, match="singular"):
        wald_test(res, [0, 1])


def test_linear_combination_test_sides():
    res = _quad_result([-0.0014, -0.0070, 0.039, 0.038, -0.0071],
                       [0.0073, 0.0045, 0.019, 0.01, 0.01])
    c = [0, 0, 1, 0, 0]
    right = linear_combination_test(res, c)
    assert right.statistic == pytest.approx(2.0526, abs=1e-4)
    assert right.p_value == pytest.approx(0.020, abs=1e-3)
    left = linear_combination_test(res, c, "left")
    assert left.p_value == pytest.approx(1 - right.p_value)
    two = linear_combination_test(res, c, "two")
    assert two.p_value == pytest.approx(2 * right.p_value)
    with pytest.raises(ValueError):
        linear_combination_test(res, c, "up")
    with pytest.raises(ValueError):
        linear_combination_test(res, [1, 2])
    with pytest.raises(DegenerateTestError):
        linear_combination_test(res, [0, 0, 0, 0, 0])


def test_check_derivative_names_culprits():
    names = ["a", "b", "c"]
    check_derivative(np.diag([1.0, 2.0, 3.0]), names)
    with pytest.raises(SingularDerivativeError) as err:
        check_derivative(np.array([[1.0, 0, 0], [0, 0, 0], [0, 0, 1.0]]), names)
    assert list(err.value.statistics) == ["b"]
    collinear = np.array([[1.0, 2.0, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(SingularDerivativeError, match="a, b") as err:
        check_derivative(collinear, names)
    assert list(err.value.statistics) == ["a", "b"]
    with pytest.raises(SingularDerivativeError, match="non-finite"):
        check_derivative(np.array([[np.nan, 0], [0, 1.0]]), names[:2])


def test_result_roundtrip():
    res = MoMResult(
        effects=(EffectSpec("outdegree"), EffectSpec("gwesp", alpha=0.5)), n_periods=1,
        theta=[-1.0, 0.4, 3.0], covariance=np.diag([0.01, 0.02, 0.3]),
        conv_t_ratios=np.array([0.01, -0.02, 0.03]), max_conv_ratio=0.08, n_phase3=1000,
        seed=5,
    )
    back = MoMResult.from_dict(res.to_dict())
    assert back.names == res.names
    assert back.effects == res.effects
    np.testing.assert_array_equal(back.theta, res.theta)
    np.testing.assert_array_equal(back.covariance, res.covariance)
    assert back.seed == 5 and back.converged
    np.testing.assert_allclose(res.std_errors, [0.1, np.sqrt(0.02), np.sqrt(0.3)])
    assert res.rates.rho == (3.0,)


FAST = EstimationOptions(phase1_runs=30, phase3_runs=300, phase3_derivative_runs=100,
                         phase2_subphases=3, seed=11)


def _panel(theta, rho, seed, n=20, n_periods=1):
    effects = (EffectSpec("outdegree"), EffectSpec("reciprocity"))
    start = DirectedNetwork.random(n, 0.15, seed)
    panel = simulate_panel(start, ParameterVector(effects, theta), (rho,) * n_periods, {},
                           opts=SimOptions(seed=seed))
    return panel, effects


def test_rate_only_model_matches_hamming():
    panel, _ = _panel((-1.5, 0.0), 3.0, 1)
    res = estimate(panel, (), FAST)
    assert res.names == ["rate period 1"]
    assert res.converged
    assert abs(res.conv_t_ratios[0]) < 0.1
    assert res.theta[0] > 0


def test_estimate_recovers_parameters():
    panel, effects = _panel((-1.5, 1.0), 4.0, 3, n=25, n_periods=2)
    res = estimate(panel, effects, FAST)
    assert res.converged
    assert res.theta.shape == (4,)
    assert np.all(np.abs(res.conv_t_ratios) < 0.1)
    assert res.max_conv_ratio < 0.25
    z = (res.theta - [-1.5, 1.0, 4.0, 4.0]) / res.std_errors
    assert np.all(np.abs(z) < 4)
    np.testing.assert_allclose(res.covariance, res.covariance.T)
    assert np.all(np.linalg.eigvalsh(res.covariance) > 0)


def test_estimate_is_reproducible():
    panel, effects = _panel((-1.5, 1.0), 4.0, 5)
    a = estimate(panel, effects, FAST)
    b = estimate(panel, effects, FAST)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.covariance, b.covariance)


def test_estimate_rejects_bad_start():
    panel, effects = _panel((-1.5, 1.0), 4.0, 5)
    with pytest.raises(ConfigurationError, match="start"):
        estimate(panel, effects, FAST, start=[0.0])


def test_collinear_covariates_are_rejected():
    panel, _ = _panel((-1.5, 0.0), 3.0, 2, n=12)
    values = np.linspace(-1.0, 1.0, 12)
    covs = {"v": ActorCovariate.from_values(values), "w": ActorCovariate.from_values(2 * values)}
    panel = NetworkPanel(panel.waves, covs)
    effects = (EffectSpec("outdegree"), EffectSpec("egoX", "v"), EffectSpec("egoX", "w"))
    with pytest.raises(SingularDerivativeError) as err:
        estimate(panel, effects, FAST)
    assert set(err.value.statistics) & {"egoX(v)", "egoX(w)"}
