import numpy as np
import pytest

from saomquad.config import (
    CovariateSpec,
    ingest,
    load_config,
    parse_bool,
    parse_effect_key,
    read_adjacency,
    read_covariate,
    write_panel,
)
from saomquad.effects import EffectSpec
from saomquad.exceptions import ConfigurationError, IngestionError
from saomquad.network import ActorCovariate, DirectedNetwork, NetworkPanel


def _write(path, text):
    path.write_text(text)
    return path


def test_parse_effect_keys():
    assert parse_effect_key("density") == [EffectSpec("density")]
    assert parse_effect_key("gwesp(alpha=0.5)") == [EffectSpec("gwesp", alpha=0.5)]
    assert parse_effect_key("egoX( grades )") == [EffectSpec("egoX", "grades")]
    quad = parse_effect_key("quadratic(age)")
    assert [e.short_name for e in quad] == ["diffSqX", "altSqX", "altX", "egoX", "egoSqX"]
    for bad in ("nonsense", "quadratic()", "egoX(a, b)", "gwesp(beta=1)", "1x"):
        with pytest.raises(ConfigurationError):
            parse_effect_key(bad)


def test_parse_bool():
    assert parse_bool("Yes") and not parse_bool("off")
    with pytest.raises(ConfigurationError):
        parse_bool("maybe")


def test_load_config_sections(tmp_path):
    path = _write(tmp_path / "m.ini", """
[data]
waves = w1.txt w2.txt   ; two waves

[covariate:grades]
file = g.csv
centered = true
range = -6 4

[effects]
density = -2
quadratic(grades) = -0.03 -0.003 0.044 -0.095 0.026
recip =

[estimation]
phase3_runs = 200
""")
    cfg = load_config(path)
    assert cfg.waves == [tmp_path / "w1.txt", tmp_path / "w2.txt"]
    assert cfg.covariates[0].range == (-6.0, 4.0) and cfg.covariates[0].centered
    assert len(cfg.effects) == 7
    assert cfg.coefficients[0] == -2.0 and cfg.coefficients[-1] is None
    assert not cfg.has_coefficients()
    assert cfg.quadratic_covariates() == ["grades"]
    assert cfg.estimation_options(seed=3).phase3_runs == 200


@pytest.mark.parametrize("text, msg", [
    ("[bogus]\nx = 1\n", "unknown section"),
    ("[effects]\negoX(v) = 1\n", "undeclared covariate"),
    ("[covariate:v]\nfile = v.csv\n[effects]\nquadratic(v) =\negoX(v) = 1\n", "twice"),
    ("[effects]\nquadratic(v) = 1 2\n[covariate:v]\nfile = v.csv\n", "coefficient"),
    ("[covariate:v]\nrange = 1 2\n", "needs a file"),
])
def test_config_errors(tmp_path, text, msg):
    with pytest.raises(ConfigurationError, match=msg):
        load_config(_write(tmp_path / "m.ini", text))


def test_unknown_estimation_option(tmp_path):
    cfg = load_config(_write(tmp_path / "m.ini", "[estimation]\nspeed = fast\n"))
    with pytest.raises(ConfigurationError, match="speed"):
        cfg.estimation_options()


@pytest.mark.parametrize("text, msg, line", [
    ("0 1\n2 0\n", "not 0 or 1", 2),
    ("0 1 0\n0 0\n0 0 0\n", "expected 3", 2),
    ("0 1 0\n0 0 1\n", "not square", 2),
    ("0 1\n0 1\n", "self-tie at row 2, column 2", 2),
])
def test_adjacency_errors_report_location(tmp_path, text, msg, line):
    path = _write(tmp_path / "w.txt", text)
    with pytest.raises(IngestionError, match=msg) as err:
        read_adjacency(path)
    assert err.value.line == line
    assert f"w.txt:{line}" in str(err.value)


def test_adjacency_missing_file(tmp_path):
    with pytest.raises(IngestionError, match="cannot read"):
        read_adjacency(tmp_path / "none.txt")


@pytest.mark.parametrize("text, msg", [
    ("id,v\n1,0.5\n9,1\n", "unknown actor"),
    ("id,v\n1,0.5\n1,1\n", "twice"),
    ("id,v\n1,0.5\n2,abc\n", "not a number"),
    ("id,v\n1,0.5\n", "no value"),
    ("id,v\n1,0.5\n2,9\n", "narrower"),
])
def test_covariate_errors(tmp_path, text, msg):
    path = _write(tmp_path / "v.csv", text)
    with pytest.raises(IngestionError, match=msg):
        read_covariate(CovariateSpec("v", path, range=(0.0, 5.0)), ["1", "2"])


def test_panel_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    waves = tuple(DirectedNetwork.random(6, 0.3, rng) for _ in range(3))
    raw = np.array([0.1, 2.5, -1.0, 3.0, 0.0, 1.0 / 3.0])
    cov = ActorCovariate.from_values(raw, centered=True, range_min=-2, range_max=4)
    panel = NetworkPanel(waves, {"v": cov}, tuple("abcdef"))
    spec = CovariateSpec("v", tmp_path / "unused.csv", True, (-2.0, 4.0))
    path = write_panel(panel, tmp_path / "out", [spec])
    back = ingest(load_config(path))
    assert back.waves == panel.waves
    assert back.actor_labels == panel.actor_labels
    np.testing.assert_array_equal(back.covariates["v"].raw_values, raw)
    np.testing.assert_array_equal(back.covariates["v"].values, cov.values)
    assert back.covariates["v"].support == cov.support
