import csv
import warnings

import networkx as nx
import numpy as np
import pytest

from saomquad.effects import EffectSpec, ParameterVector
from saomquad.estimation import MoMResult
from saomquad.gof import (
    FAMILIES,
    TRIAD_TYPES,
    auxiliary_statistics,
    geodesic_distribution,
    gof,
    gof_all,
    mahalanobis_test,
    statistic_labels,
    transitive_summary,
    triad_census,
)
from saomquad.network import DirectedNetwork
from saomquad.simulation import SimOptions, simulate_panel


def test_empty_network_statistics():
    n = 6
    empty = DirectedNetwork.empty(n)
    assert auxiliary_statistics(empty, "indegree_distribution").tolist() == [n] * 9
    assert auxiliary_statistics(empty, "outdegree_distribution").tolist() == [n] * 9
    assert geodesic_distribution(empty.ties).tolist() == [0] * 6 + [n * (n - 1)]
    census = triad_census(empty.ties)
    assert census[TRIAD_TYPES.index("003")] == 20
    assert census.sum() == 20


def test_complete_network_statistics():
    n = 5
    full = DirectedNetwork.complete(n)
    assert auxiliary_statistics(full, "indegree_distribution").tolist() == [0] * 4 + [n] * 5
    assert geodesic_distribution(full.ties).tolist() == [n * (n - 1)] + [0] * 6
    census = triad_census(full.ties)
    assert census[TRIAD_TYPES.index("300")] == 10
    assert transitive_summary(census)["total"] == 10


def test_degree_overflow_bin():
    star = DirectedNetwork.from_edges(12, [(0, j) for j in range(1, 12)])
    out = auxiliary_statistics(star, "outdegree_distribution")
    # eleven actors have outdegree 0; the hub has 11 > 8 and enters no cumulative count
    assert out.tolist() == [11] * 9


def test_geodesic_overflow_bucket():
    path = DirectedNetwork.from_edges(8, [(k, k + 1) for k in range(7)])
    g = geodesic_distribution(path.ties)
    assert g.tolist() == [7, 6, 5, 4, 3, 3, 28]
    assert g.sum() == 8 * 7


def test_triad_census_matches_networkx():
    rng = np.random.default_rng(1)
    for _ in range(60):
        n = int(rng.integers(3, 12))
        net = DirectedNetwork.random(n, rng.uniform(0.05, 0.9), rng)
        g = nx.from_numpy_array(net.ties, create_using=nx.DiGraph)
        expect = nx.triadic_census(g)
        got = triad_census(net.ties)
        assert got.tolist() == [expect[t] for t in TRIAD_TYPES]


def test_single_triads():
    cases = {
        "012": [(0, 1)],
        "102": [(0, 1), (1, 0)],
        "021D": [(0, 1), (0, 2)],
        "021U": [(1, 0), (2, 0)],
        "021C": [(0, 1), (1, 2)],
        "030T": [(0, 1), (1, 2), (0, 2)],
        "030C": [(0, 1), (1, 2), (2, 0)],
        "120D": [(0, 1), (1, 0), (2, 0), (2, 1)],
        "120U": [(0, 1), (1, 0), (0, 2), (1, 2)],
    }
    for name, edges in cases.items():
        census = triad_census(DirectedNetwork.from_edges(3, edges).ties)
        assert TRIAD_TYPES[int(np.argmax(census))] == name, name


def test_unknown_family():
    with pytest.raises(ValueError, match="unknown GOF family"):
        auxiliary_statistics(DirectedNetwork.empty(3), "clustering")
    assert len(statistic_labels("geodesic_distribution")) == 7


def test_observation_at_mean_has_p_one():
    rng = np.random.default_rng(2)
    sim = rng.normal(size=(200, 3))
    res = mahalanobis_test(sim.mean(axis=0), sim)
    assert res.distance == pytest.approx(0.0, abs=1e-12)
    assert res.p_value == 1.0


def test_one_dimensional_two_sd():
    rng = np.random.default_rng(3)
    sim = rng.normal(size=(20_000, 1))
    obs = sim.mean(axis=0) + 2 * sim.std(axis=0, ddof=1)
    res = mahalanobis_test(obs, sim)
    assert res.distance == pytest.approx(2.0, rel=1e-9)
    assert res.p_value == pytest.approx(0.0455, abs=0.005)


def test_p_value_counts_observation():
    sim = np.arange(10.0)[:, None]
    res = mahalanobis_test([100.0], sim)
    assert res.p_value == pytest.approx(1 / 11)


def test_affine_invariance():
    rng = np.random.default_rng(4)
    sim = rng.normal(size=(300, 4)) @ rng.normal(size=(4, 4))
    obs = rng.normal(size=4) * 3
    a = rng.normal(size=(4, 4)) + 4 * np.eye(4)
    b = rng.normal(size=4)
    base = mahalanobis_test(obs, sim)
    moved = mahalanobis_test(a @ obs + b, sim @ a.T + b)
    assert moved.distance == pytest.approx(base.distance, rel=1e-7)
    assert moved.p_value == base.p_value


def test_zero_variance_columns_are_dropped():
    rng = np.random.default_rng(5)
    sim = rng.normal(size=(100, 3))
    obs = np.array([0.5, -1.0, 2.0])
    base = mahalanobis_test(obs, sim)
    padded = np.column_stack([sim, np.full(100, 7.0)])
    with pytest.warns(RuntimeWarning, match="zero-variance"):
        res = mahalanobis_test(np.append(obs, 7.0), padded)
    assert res.distance == pytest.approx(base.distance)
    assert res.p_value == base.p_value
    assert res.kept.tolist() == [0, 1, 2]


def test_collinear_statistics_use_pseudo_inverse():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(200, 2))
    sim = np.column_stack([x, x.sum(axis=1)])
    obs = np.array([1.0, 0.5, 1.5])
    res = mahalanobis_test(obs, sim)
    assert res.distance == pytest.approx(mahalanobis_test(obs[:2], x).distance, rel=1e-6)


def test_shape_validation():
    with pytest.raises(ValueError):
        mahalanobis_test([1.0, 2.0], np.zeros((10, 3)))


def _fitted_panel(seed=0):
    effects = (EffectSpec("outdegree"), EffectSpec("reciprocity"))
    theta = np.array([-1.5, 1.0, 3.0])
    start = DirectedNetwork.random(15, 0.15, seed)
    panel = simulate_panel(start, ParameterVector(effects, theta[:2]), (3.0,), {},
                           opts=SimOptions(seed=seed))
    fitted = MoMResult(effects=effects, n_periods=1, theta=theta,
                       covariance=np.eye(3) * 0.01, conv_t_ratios=np.zeros(3),
                       max_conv_ratio=0.0, n_phase3=0)
    return panel, fitted


def test_gof_reports_and_table(tmp_path):
    panel, fitted = _fitted_panel()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        reports = gof_all(panel, fitted, n_sim=50, seed=1)
    assert set(reports) == set(FAMILIES)
    for f, rep in reports.items():
        assert rep.simulated.shape == (50, len(rep.labels))
        assert 1 / 51 <= rep.p_value <= 1.0
        np.testing.assert_array_equal(rep.observed, auxiliary_statistics(panel.waves[1], f))
    tri = reports["triad_census"]
    assert "transitive_observed" in tri.to_dict()
    path = tmp_path / "triads.csv"
    tri.write_table(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["statistic_index", "run", "value"]
    assert len(rows) == 1 + 16 * 51
    assert rows[1][1] == "observed"
    assert float(rows[1 + 16][2]) == tri.simulated[0, 0]


def test_gof_is_reproducible_and_consistent():
    panel, fitted = _fitted_panel(3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a = gof(panel, fitted, "outdegree_distribution", n_sim=40, seed=9)
        b = gof_all(panel, fitted, n_sim=40, seed=9)["outdegree_distribution"]
    np.testing.assert_array_equal(a.simulated, b.simulated)
    assert a.p_value == b.p_value


def test_gof_validation():
    panel, fitted = _fitted_panel()
    with pytest.raises(ValueError, match="n_sim"):
        gof(panel, fitted, "triad_census", n_sim=5)
    with pytest.raises(ValueError, match="unknown"):
        gof(panel, fitted, "cliques", n_sim=50)
