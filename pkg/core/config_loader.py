"""Run configuration files: YAML to RunConfig and back."""
import hashlib
import json
import logging
import os
from typing import Any, Dict

import yaml

from config import get_output_dir
from core.model_factory import build_model, build_profile, normalize_model_spec
from models.errors import ConfigError
from models.run_config import ExperimentConfig, OracleBudget, OutputConfig, RunConfig
from models.test_function import TestFunction

logger = logging.getLogger(__name__)

SECTIONS = ("model", "experiment", "output")
EXPERIMENT_KEYS = (
    "axis", "grid", "n_samples", "n_obs", "n_reps", "p", "f", "seed",
    "oracle_n_ref", "oracle_n_reps", "k2_n_obs", "k2_n_inner", "bound_mode", "epsilon",
)
OUTPUT_KEYS = ("dir", "name")


def _section(raw: Dict[str, Any], name: str, allowed) -> Dict[str, Any]:
    section = raw.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(name, "expected a mapping")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown key")
    return section


def _parse_experiment(section: Dict[str, Any]) -> ExperimentConfig:
    defaults = ExperimentConfig()
    try:
        f = TestFunction.from_spec(section["f"]) if "f" in section else defaults.f
    except ValueError as e:
        raise ConfigError("experiment.f", str(e)) from e
    experiment = ExperimentConfig(
        axis=section.get("axis", defaults.axis),
        grid=list(section.get("grid", defaults.grid)),
        n_samples=section.get("n_samples", defaults.n_samples),
        n_obs=section.get("n_obs", defaults.n_obs),
        n_reps=section.get("n_reps", defaults.n_reps),
        p=section.get("p", defaults.p),
        f=f,
        seed=section.get("seed", defaults.seed),
        oracle=OracleBudget(
            n_ref=section.get("oracle_n_ref", defaults.oracle.n_ref),
            n_reps=section.get("oracle_n_reps", defaults.oracle.n_reps),
        ),
        k2_n_obs=section.get("k2_n_obs", defaults.k2_n_obs),
        k2_n_inner=section.get("k2_n_inner", defaults.k2_n_inner),
        bound_mode=section.get("bound_mode", defaults.bound_mode),
        epsilon=section.get("epsilon", defaults.epsilon),
    )
    for key in ("n_samples", "n_obs", "n_reps", "p", "seed", "k2_n_obs", "k2_n_inner"):
        value = getattr(experiment, key)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"experiment.{key}", f"expected an integer, got {value!r}")
    experiment.validate()
    return experiment


def parse_config(raw: Dict[str, Any]) -> RunConfig:
    """Validates a raw mapping (as loaded from YAML) into a RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("", "configuration must be a mapping with model, experiment and output sections")
    for key in raw:
        if key not in SECTIONS:
            raise ConfigError(str(key), "unknown section")
    if "model" not in raw:
        raise ConfigError("model", "section is required")
    output = _section(raw, "output", OUTPUT_KEYS)
    defaults = OutputConfig(dir=get_output_dir())
    config = RunConfig(
        model=normalize_model_spec(raw["model"]),
        experiment=_parse_experiment(_section(raw, "experiment", EXPERIMENT_KEYS)),
        output=OutputConfig(dir=str(output.get("dir", defaults.dir)), name=str(output.get("name", defaults.name))),
    )
    validate_run_config(config)
    return config


def validate_run_config(config: RunConfig) -> None:
    """Assembles the base model and checks profile integrability at every d_y of a sweep."""
    build_model(config.model)
    experiment = config.experiment
    experiment.f.check_dimension(config.model["dx"] if experiment.axis != "d_x" else min(experiment.grid))
    if config.model["type"] == "elliptical" and experiment.axis == "d_y":
        for d_y in experiment.grid:
            build_profile(config.model["profile"], d_y).check_integrable(d_y)


def to_raw(config: RunConfig) -> Dict[str, Any]:
    experiment = config.experiment
    return {
        "model": config.model,
        "experiment": {
            "axis": experiment.axis,
            "grid": list(experiment.grid),
            "n_samples": experiment.n_samples,
            "n_obs": experiment.n_obs,
            "n_reps": experiment.n_reps,
            "p": experiment.p,
            "f": experiment.f.to_spec(),
            "seed": experiment.seed,
            "oracle_n_ref": experiment.oracle.n_ref,
            "oracle_n_reps": experiment.oracle.n_reps,
            "k2_n_obs": experiment.k2_n_obs,
            "k2_n_inner": experiment.k2_n_inner,
            "bound_mode": experiment.bound_mode,
            "epsilon": experiment.epsilon,
        },
        "output": {"dir": config.output.dir, "name": config.output.name},
    }


def load_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(path, "configuration file not found")
    with open(path, "r") as f:
        try:
            raw = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(path, f"invalid YAML: {e}") from e
    logger.info("loaded configuration from %s", path)
    return parse_config(raw)


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(to_raw(config), default_flow_style=False, sort_keys=False)


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical JSON form of the resolved configuration."""
    canonical = json.dumps(to_raw(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
