import csv
import json

import numpy as np
import pytest

from saomquad.effects import EffectSpec, quadratic_effects
from saomquad.estimation import MoMResult
from saomquad.exceptions import ConfigurationError
from saomquad.network import CovariateRange
from saomquad.report import (
    NORM_UNDEFINED,
    analyze_selection,
    selection_from_result,
    selection_summary,
    write_selection_bundle,
)
from saomquad.selection import QuadraticSelection

GRADES = QuadraticSelection((-0.0288, -0.003, 0.044, -0.095, 0.026), CovariateRange(-6, 4))
GRADES_COV = np.diag(np.square([0.0073, 0.003, 0.01, 0.02, 0.01]))


def test_grades_report_verdicts():
    report, _ = analyze_selection(GRADES, GRADES_COV, "grades")
    assert report["verdicts"] == {
        "homophily": "present",
        "attachment_conformity": "present",
        "aspiration": "medium",
        "sociability": "none",
    }
    assert report["social_norm"]["value"] == pytest.approx(7.3333, abs=1e-4)
    assert not report["social_norm"]["in_range"]
    assert report["attraction_weights"]["homophily"] == pytest.approx(0.9057, abs=1e-4)
    assert report["aspiration"]["tests"]["strong"]["value"] == pytest.approx(-0.556)
    assert [row["v_ego"] for row in report["optimum"]] == [-6.0, -3.5, -1.0, 1.5, 4.0]
    json.dumps(report)


def test_undefined_norm_marker():
    sel = QuadraticSelection((-0.03, 0.0, 0.04, 0.0, 0.0), CovariateRange(-2, 2))
    report, _ = analyze_selection(sel)
    assert report["social_norm"]["undefined"]
    assert report["social_norm"]["marker"] == NORM_UNDEFINED
    assert report["social_norm"]["value"] is None
    assert report["verdicts"]["attachment_conformity"] == "none"
    assert NORM_UNDEFINED in selection_summary(report)


def test_zero_selection_function():
    sel = QuadraticSelection((0.0,) * 5, CovariateRange(-1, 1))
    report, table = analyze_selection(sel)
    assert report["verdicts"] == {
        "homophily": "none",
        "attachment_conformity": "none",
        "aspiration": "none",
        "sociability": "none",
    }
    assert report["attraction_weights"] is None
    assert np.all(table.rows[:, 2] == 0)


def test_selection_from_result():
    effects = (EffectSpec("density"),) + quadratic_effects("age")
    theta = [-2.0, -0.0014, -0.0070, 0.039, 0.038, -0.0071, 5.0]
    cov = np.diag(np.arange(1.0, 8.0))
    res = MoMResult(effects=effects, n_periods=1, theta=theta, covariance=cov,
                    conv_t_ratios=np.zeros(7), max_conv_ratio=0.0, n_phase3=0)
    sel, sub = selection_from_result(res, "age", CovariateRange(-5, 11))
    assert sel.theta == pytest.approx((-0.0014, -0.0070, 0.039, 0.038, -0.0071))
    np.testing.assert_array_equal(np.diag(sub), np.arange(2.0, 7.0))
    with pytest.raises(ConfigurationError, match="diffSqX") as err:
        selection_from_result(res, "grades", CovariateRange(0, 1))
    assert "missing" in str(err.value)


def test_bundle_files(tmp_path):
    report, table = analyze_selection(GRADES, GRADES_COV, "grades", grid_resolution=11)
    paths = write_selection_bundle(report, table, tmp_path, prefix="grades_")
    assert json.loads(paths["report"].read_text())["verdicts"]["aspiration"] == "medium"
    assert paths["summary"].read_text().startswith("Selection function for grades")
    rows = list(csv.reader(paths["table"].open()))
    assert rows[0] == ["v_ego", "v_alter", "value"]
    assert len(rows) == 1 + 5 * 11
    curve = list(csv.reader(paths["optimum_curve"].open()))
    assert curve[0] == ["v_ego", "optimum"]
    for p in paths.values():
        assert p.name.startswith("grades_")
