"""CSV rows and JSON manifest for one experiment, written under the output directory."""
import csv
import json
import logging
import os
from dataclasses import asdict
from typing import Optional, Tuple

from config import ARTIFACT_VERSION
from core.config_loader import config_hash, to_raw
from models.errors import ConfigError
from models.experiment_result import ExperimentResult
from models.run_config import RunConfig

logger = logging.getLogger(__name__)

ERROR_COLUMNS = ("axis", "axis_value", "p", "error_p", "error_se", "mean_ess", "mean_rho_hat",
                 "bound_k2", "oracle_se", "wall_ms")
BOUND_CHECK_COLUMNS = ("axis", "axis_value", "k2_mc", "k2_mc_se", "bound_k2", "method", "violation", "wall_ms")


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def output_paths(out_dir: str, name: str) -> Tuple[str, str]:
    if not name or os.path.basename(name) != name or name in (".", ".."):
        raise ConfigError("output.name", f"must be a plain file name, got '{name}'")
    return os.path.join(out_dir, f"{name}.csv"), os.path.join(out_dir, f"{name}.json")


def columns_for(result: ExperimentResult):
    return BOUND_CHECK_COLUMNS if result.kind == "bound_vs_mc" else ERROR_COLUMNS


def write_csv(result: ExperimentResult, path: str) -> None:
    columns = columns_for(result)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in result.rows:
            values = asdict(row)
            values.update(axis=result.axis, p=result.p)
            writer.writerow([format_value(values[column]) for column in columns])


def manifest(result: ExperimentResult, config: RunConfig) -> dict:
    return {
        "kind": result.kind,
        "axis": result.axis,
        "p": result.p,
        "seed": config.experiment.seed,
        "artifact_version": ARTIFACT_VERSION,
        "config_hash": config_hash(config),
        "config": to_raw(config),
        "row_count": len(result.rows),
        "columns": list(columns_for(result)),
        "flags": list(result.flags),
        "violations": list(result.violations),
        "metadata": result.metadata,
    }


def write_result(result: ExperimentResult, config: RunConfig, out_dir: Optional[str] = None) -> Tuple[str, str]:
    """Writes <name>.csv and <name>.json under out_dir (default: the config's output.dir)."""
    out_dir = out_dir or config.output.dir
    csv_path, json_path = output_paths(out_dir, config.output.name)
    os.makedirs(out_dir, exist_ok=True)
    write_csv(result, csv_path)
    with open(json_path, "w") as f:
        json.dump(manifest(result, config), f, indent=2, sort_keys=True)
    logger.info("wrote %d rows to %s", len(result.rows), csv_path)
    return csv_path, json_path
