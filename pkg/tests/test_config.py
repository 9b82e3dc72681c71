import logging
import os

import pytest
import yaml

from config import get_default_workers, get_log_level, get_output_dir
from core.config_loader import config_hash, dump_config, load_config, parse_config, to_raw
from models.errors import ConfigError, NonIntegrableProfile
from models.run_config import OracleBudget
from models.test_function import TestFunction

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")
SHIPPED = sorted(name for name in os.listdir(CONFIG_DIR) if name != "bad_pearson7.yaml")


def _raw(**experiment):
    raw = {"model": {"type": "linear_gaussian", "dx": 2, "dy": 1}, "output": {"dir": "out", "name": "t"}}
    if experiment:
        raw["experiment"] = experiment
    return raw


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_configs_load_and_round_trip(name):
    config = load_config(os.path.join(CONFIG_DIR, name))
    again = parse_config(yaml.safe_load(dump_config(config)))
    assert again == config
    assert config_hash(again) == config_hash(config)


def test_non_integrable_profile_is_rejected_at_load():
    with pytest.raises(NonIntegrableProfile, match="alpha > d_y/p"):
        load_config(os.path.join(CONFIG_DIR, "bad_pearson7.yaml"))


def test_integrability_is_checked_across_a_dy_sweep():
    raw = {
        "model": {"type": "elliptical", "dx": 1, "dy": 1, "profile": {"kind": "gen_cauchy", "p": 2, "alpha": 1.5}},
        "experiment": {"axis": "d_y", "grid": [1, 2, 3, 4]},
    }
    with pytest.raises(NonIntegrableProfile):
        parse_config(raw)


def test_defaults_are_filled():
    config = parse_config(_raw())
    assert config.experiment.axis == "N"
    assert config.experiment.p == 2
    assert config.experiment.f == TestFunction.indicator(0, 0.0)
    assert config.model["a_matrix"] == {"seeded_scaled": 0}
    assert to_raw(config)["experiment"]["oracle_n_ref"] is None


def test_hash_tracks_content():
    base = parse_config(_raw(seed=1))
    assert config_hash(base) == config_hash(parse_config(_raw(seed=1)))
    assert config_hash(base) != config_hash(parse_config(_raw(seed=2)))
    assert len(config_hash(base)) == 64


@pytest.mark.parametrize("raw, path", [
    ({"model": {"type": "linear_gaussian"}, "plots": {}}, "plots"),
    ({"experiment": {}}, "model"),
    (_raw(bogus=1), "experiment.bogus"),
    ({"model": {"type": "linear_gaussian", "sigma": 1.0}}, "model.sigma"),
    ({"model": {"type": "mixture"}}, "model.type"),
    (_raw(n_obs=2.5), "experiment.n_obs"),
    (_raw(grid=[4, 2]), "experiment.grid"),
    (_raw(grid=[]), "experiment.grid"),
    (_raw(p=3), "experiment.p"),
    (_raw(axis="time"), "experiment.axis"),
    (_raw(seed=-1), "experiment.seed"),
    (_raw(bound_mode="exact"), "experiment.bound_mode"),
    (_raw(oracle_n_ref=5_000), "experiment.oracle_n_ref"),
    (_raw(oracle_n_ref=12_000.5), "experiment.oracle_n_ref"),
    (_raw(oracle_n_reps=4), "experiment.oracle_n_reps"),
    (_raw(axis="d_x", grid=[2, 4], epsilon=0.0), "experiment.epsilon"),
    (_raw(axis="d_x", grid=[2, 4], epsilon="small"), "experiment.epsilon"),
    (_raw(epsilon=0.1), "experiment.epsilon"),
    (_raw(f={"kind": "sine"}), "experiment.f"),
    (_raw(f={"kind": "tanh", "coord": 0, "scale": 2}), "experiment.f"),
])
def test_invalid_configs_name_the_offending_key(raw, path):
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    assert info.value.path == path


def test_test_function_coordinate_is_checked():
    with pytest.raises(ValueError, match="out of range"):
        parse_config(_raw(f={"kind": "tanh", "coord": 2}))


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "absent.yaml"))
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: [unclosed\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(str(bad))
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ConfigError):
        load_config(str(empty))


def test_oracle_budget_rule():
    assert OracleBudget().resolve_n_ref(16384) == 1_638_400
    assert OracleBudget().resolve_n_ref(16) == 10_000
    assert OracleBudget(n_ref=50_000).resolve_n_ref(16384) == 50_000


def test_output_dir_from_environment(monkeypatch):
    monkeypatch.setenv("SNIS_OUTPUT_DIR", "/tmp/snis-results")
    assert get_output_dir() == "/tmp/snis-results"
    raw = _raw()
    del raw["output"]
    assert parse_config(raw).output.dir == "/tmp/snis-results"
    raw["output"] = {"dir": "explicit"}
    assert parse_config(raw).output.dir == "explicit"


def test_default_workers(monkeypatch):
    monkeypatch.setenv("SNIS_WORKERS", "3")
    assert get_default_workers() == 3
    for bad in ("0", "many"):
        monkeypatch.setenv("SNIS_WORKERS", bad)
        with pytest.raises(ValueError, match="SNIS_WORKERS"):
            get_default_workers()
    monkeypatch.delenv("SNIS_WORKERS")
    assert get_default_workers() >= 1


def test_log_level(monkeypatch):
    monkeypatch.delenv("SNIS_LOG_LEVEL", raising=False)
    assert get_log_level() == logging.WARNING
    assert get_log_level("debug") == logging.DEBUG
    monkeypatch.setenv("SNIS_LOG_LEVEL", "error")
    assert get_log_level() == logging.ERROR
    with pytest.raises(ValueError, match="SNIS_LOG_LEVEL"):
        get_log_level("chatty")
