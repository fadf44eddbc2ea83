import pytest
import yaml

from latticehpo.config import ConfigError, load_config, parse_config


def base(**over):
    cfg = {
        "domain": {"dims": [{"name": "a", "range": [0, 19, 1]}, {"name": "b", "values": [1, 2, 3]}]},
        "objective": {"kind": "quadratic"},
    }
    cfg.update(over)
    return cfg


def test_defaults():
    cfg = parse_config(base())
    assert cfg.trials == 5 and cfg.budget == 50 and cfg.replicates == 5
    assert cfg.strategies == ("rbf", "gp", "random")
    assert cfg.initial_size == 3
    assert cfg.domain.cardinality == 60


@pytest.mark.parametrize("over, path", [
    ({"trials": 0}, "trials"),
    ({"budget": 2, "n0": 3}, "budget"),
    ({"budget": 61}, "budget"),
    ({"strategies": []}, "strategies"),
    ({"strategies": ["rbf", "bayes"]}, "strategies[1]"),
    ({"objective": {"kind": "nope"}}, "objective.kind"),
    ({"objective": {"kind": "quadratic", "target": [25, 0]}}, "objective.target"),
    ({"domain": {"dims": [{"name": "a", "values": [2, 1]}]}}, "domain.dims[0]"),
    ({"domain": {"dims": [{"name": "a"}]}}, "domain.dims[0]"),
    ({"domain": {"preset": "huge"}}, "domain.preset"),
    ({"acquisition": {"weights": [0.5, 2.0]}}, "acquisition.weights"),
    ({"extra": 1}, "extra"),
    ({"objective": {"kind": "mlp", "train_count": 10}}, "objective.series"),
])
def test_errors_name_the_field(over, path):
    with pytest.raises(ConfigError) as err:
        parse_config(base(**over))
    assert err.value.path == path


def test_mlp_objective_requires_mlp_dimensions():
    with pytest.raises(ConfigError) as err:
        parse_config(base(objective={"kind": "mlp", "series": {"n_days": 100}, "train_count": 10}))
    assert err.value.path == "domain"


def test_presets():
    cfg = parse_config({"domain": {"preset": "reduced_mlp"},
                        "objective": {"kind": "mlp", "series": {"n_days": 400}, "train_count": 300},
                        "budget": 20})
    assert cfg.domain.cardinality == 32
    cfg = parse_config({"domain": {"preset": "mlp_table"}, "objective": {"kind": "quadratic"}})
    assert cfg.domain.cardinality == 7_588_800


def test_overrides_recheck():
    cfg = parse_config(base(budget=10))
    assert cfg.with_overrides(seed=4, trials=2).trials == 2
    with pytest.raises(ConfigError):
        cfg.with_overrides(budget=1)


def test_load_resolves_relative_series(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"domain": {"preset": "reduced_mlp"},
                                 "objective": {"kind": "mlp", "series": "data.csv", "train_count": 5},
                                 "budget": 10}))
    cfg = load_config(p)
    assert cfg.objective["series"] == str(tmp_path / "data.csv")


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("domain: [unclosed")
    with pytest.raises(ConfigError):
        load_config(bad)
