import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saomquad.effects import (
    COVARIATE_KINDS,
    STRUCTURAL_KINDS,
    ChangeScorer,
    EffectSpec,
    ParameterVector,
    change_scores,
    evaluation_function,
    gwesp_weight,
    network_statistics,
    quadratic_effects,
    statistic,
    statistic_vector,
)
from saomquad.exceptions import ConfigurationError
from saomquad.network import ActorCovariate, CovariateRange, DirectedNetwork, toggle
from saomquad.selection import QuadraticSelection, evaluate
from saomquad.simulation import CompiledModel

ALL_SPECS = [EffectSpec(k) for k in STRUCTURAL_KINDS] + [
    EffectSpec(k, "v") for k in COVARIATE_KINDS
]


def _covs(values):
    return {"v": ActorCovariate.from_values(values)}


def test_gwesp_unit_values():
    assert gwesp_weight([0, 1, 2], math.log(2.0)).tolist() == [0.0, 1.0, 1.5]


def test_gwesp_monotone_and_bounded():
    w = gwesp_weight(np.arange(50), 0.7)
    assert np.all(np.diff(w) >= 0)
    assert np.all(w <= math.exp(0.7))


def test_structural_hand_counts():
    mutual = DirectedNetwork.from_edges(3, [(0, 1), (1, 0)])
    assert statistic(EffectSpec("reciprocity"), mutual, {}, 0) == 1
    assert statistic(EffectSpec("outdegree"), mutual, {}, 0) == 1
    star = DirectedNetwork.from_edges(3, [(0, 1), (2, 1)])
    assert statistic(EffectSpec("indegree_popularity"), star, {}, 0) == 2
    assert statistic(EffectSpec("outdegree_activity"), DirectedNetwork.complete(4), {}, 0) == 9


def test_transitive_triple_gwesp():
    # i -> h -> j and i -> j: the tie i -> j has one shared partner
    net = DirectedNetwork.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert statistic(EffectSpec("gwesp"), net, {}, 0) == pytest.approx(1.0)
    assert statistic(EffectSpec("gwesp", alpha=1.0), net, {}, 1) == 0.0


def test_cov_same_counts_within_group_ties():
    covs = _covs([0.0, 0.0, 1.0, 1.0])
    net = DirectedNetwork.from_edges(4, [(0, 1), (0, 2), (2, 3), (3, 2), (1, 3)])
    total = network_statistics([EffectSpec("sameX", "v")], net, covs)[0]
    assert total == 3


def test_covariate_statistics_by_hand():
    covs = _covs([1.0, -2.0, 3.0])
    net = DirectedNetwork.from_edges(3, [(0, 1), (0, 2)])
    expect = {
        "egoX": 2.0, "altX": 1.0, "altSqX": 13.0, "egoSqX": 2.0,
        "diffSqX": 13.0, "egoXaltX": 1.0, "sameX": 0.0,
    }
    for short, value in expect.items():
        assert statistic(EffectSpec(short, "v"), net, covs, 0) == pytest.approx(value)


def test_evaluation_function_linearity():
    net = DirectedNetwork.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    p = ParameterVector((EffectSpec("density"),), (-2.0,))
    assert evaluation_function(p, net, {}, 0) == -6.0
    zero = ParameterVector(tuple(ALL_SPECS), (0.0,) * len(ALL_SPECS))
    assert evaluation_function(zero, net, _covs([0.0, 1.0, 2.0, 3.0]), 0) == 0.0


def test_quadratic_effects_reproduce_selection_function():
    rng = np.random.default_rng(4)
    theta = rng.normal(size=5)
    v = np.array([-1.5, 2.0, 0.5])
    covs = _covs(v)
    params = ParameterVector(quadratic_effects("v"), theta)
    net = DirectedNetwork.from_edges(3, [(0, 1)])
    sel = QuadraticSelection(tuple(theta), CovariateRange(-2, 2))
    assert evaluation_function(params, net, covs, 0) == pytest.approx(
        float(evaluate(sel, v[0], v[1])), abs=1e-12
    )


def test_effect_spec_validation():
    with pytest.raises(ConfigurationError):
        EffectSpec("cov_ego")
    with pytest.raises(ConfigurationError):
        EffectSpec("outdegree", "v")
    with pytest.raises(ConfigurationError):
        EffectSpec("gwesp", alpha=0.0)
    with pytest.raises(ConfigurationError):
        EffectSpec("nonsense")
    assert EffectSpec("diffSqX", "grades").name == "diffSqX(grades)"
    assert EffectSpec("cov_alter", "v").short_name == "altX"


def test_unknown_covariate():
    net = DirectedNetwork.empty(3)
    with pytest.raises(ConfigurationError, match="unknown covariate"):
        statistic(EffectSpec("egoX", "missing"), net, {}, 0)


def test_pure_outdegree_change_scores():
    p = ParameterVector((EffectSpec("density"),), (1.0,))
    net = DirectedNetwork.from_edges(3, [(0, 1)])
    assert change_scores(p, net, {}, 0).tolist() == [0.0, -1.0, 1.0]


def _brute_force(params, net, covs, i):
    base = evaluation_function(params, net, covs, i)
    return np.array([
        evaluation_function(params, toggle(net, i, j), covs, i) - base for j in range(net.n)
    ])


def _random_case(rng):
    n = int(rng.integers(2, 11))
    net = DirectedNetwork.random(n, rng.uniform(0.05, 0.7), rng)
    v = np.round(rng.normal(size=n), 1) if rng.random() < 0.7 else rng.integers(0, 3, n) * 1.0
    if np.ptp(v) == 0:
        v[0] += 1.0
    k = int(rng.integers(1, len(ALL_SPECS) + 1))
    chosen = rng.choice(len(ALL_SPECS), k, replace=False)
    specs = []
    for c in chosen:
        s = ALL_SPECS[c]
        if s.kind in ("gwesp", "reciprocity_gwesp"):
            s = EffectSpec(s.kind, alpha=float(rng.uniform(0.2, 2.0)))
        specs.append(s)
    params = ParameterVector(tuple(specs), rng.normal(size=k))
    return params, net, _covs(v), int(rng.integers(0, n))


def test_change_scores_match_recomputation():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        params, net, covs, i = _random_case(rng)
        expect = _brute_force(params, net, covs, i)
        got = change_scores(params, net, covs, i)
        assert got[i] == 0.0
        np.testing.assert_allclose(got, expect, atol=1e-10, rtol=0)


def test_compiled_scores_match_python_scorer():
    rng = np.random.default_rng(7)
    for _ in range(200):
        params, net, covs, i = _random_case(rng)
        x = net.copy_ties()
        py = ChangeScorer(params, covs, net.n).scores(x, i)
        nb = CompiledModel(params, covs, net.n).scores(x, i)
        np.testing.assert_allclose(nb, py, atol=1e-10, rtol=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_statistic_vector_dot_product(seed):
    rng = np.random.default_rng(seed)
    params, net, covs, i = _random_case(rng)
    vec = statistic_vector(params.effects, net, covs, i)
    assert evaluation_function(params, net, covs, i) == pytest.approx(
        float(vec @ params.as_array()), abs=1e-10
    )
