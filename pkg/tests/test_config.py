import pytest

from reservezones.config import (CONFIG_ENV, ConfigError, RunConfig, config_from_mapping,
                                 load_config, parse_model_list)


def test_defaults_validate():
    cfg = RunConfig().validate()
    assert cfg.model == "zonal-extensive" and cfg.scenarios.count == 1000


def test_yaml_file(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("case: mesh6\nmodel: sequential\nq: 0.05\nscenarios:\n  count: 50\n"
                 "  reduce_to: 5\nsolver:\n  gap: 1.0e-5\n")
    cfg = load_config(p).validate()
    assert (cfg.case, cfg.model, cfg.q) == ("mesh6", "sequential", 0.05)
    assert cfg.solver_params().gap == 1e-5


def test_env_var_supplies_default_path(tmp_path, monkeypatch):
    p = tmp_path / "env.yaml"
    p.write_text("zones: 3\n")
    monkeypatch.setenv(CONFIG_ENV, str(p))
    assert load_config(None).zones == 3


@pytest.mark.parametrize("doc,where", [
    ({"zonez": 2}, "configuration: zonez"),
    ({"scenarios": {"cnt": 4}}, "scenarios: cnt"),
    ({"stability_models": [{"model": "sequential", "qq": 1}]}, "stability_models[0]: qq"),
])
def test_unknown_keys_named(doc, where):
    with pytest.raises(ConfigError, match=where.replace("[", r"\[").replace("]", r"\]")):
        config_from_mapping(doc)


@pytest.mark.parametrize("field,value", [("q", 0.5), ("zones", 0), ("chi", 1.5), ("model", "x"),
                                         ("jobs", 0), ("y_min", 0)])
def test_range_checks(field, value):
    cfg = RunConfig()
    setattr(cfg, field, value)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_reduce_to_above_count():
    cfg = config_from_mapping({"scenarios": {"count": 5, "reduce_to": 10}})
    with pytest.raises(ConfigError, match="reduce_to"):
        cfg.validate()


def test_bad_solver_option():
    cfg = config_from_mapping({"solver": {"colour": "red"}})
    with pytest.raises(ConfigError, match="solver"):
        cfg.validate()


def test_model_list_parsing():
    specs = parse_model_list("stochastic; sequential:q=0.01 ;zonal-benders:zones=2,chi=0.5")
    assert [s.model for s in specs] == ["stochastic", "sequential", "zonal-benders"]
    assert specs[1].q == 0.01 and specs[2].zones == 2 and specs[2].chi == 0.5
    with pytest.raises(ConfigError):
        parse_model_list("sequential:q")
