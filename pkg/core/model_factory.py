"""
Model specifications: validation, defaults and assembly.

A model spec is the `model` section of a run configuration. Specs describe
model families: dimensions can be overridden at build time so that sweeps
over d_x or d_y produce one concrete model per grid value.
"""
import logging
import math
from typing import Any, Dict, Optional

import numpy as np

from models.bayes_models import EllipticalModel, GaussianPrior, LinearGaussianModel, UniformBoxPrior
from models.errors import ConfigError, DimensionMismatch
from models.observation_map import NONLINEARITIES, SaturatingObservationMap
from models.radial_profile import RadialProfile
from utils.linalg import spd_factor
from utils.random_stream import RandomStream

logger = logging.getLogger(__name__)

MODEL_TYPES = ("linear_gaussian", "elliptical")
MATRIX_FORMS = ("scalar", "diagonal", "dense")

_LG_DEFAULTS = {
    "mu_x": 0.0,
    "sigma_x": {"scalar": 1.0},
    "a_matrix": {"seeded_scaled": 0},
    "r_matrix": {"scalar": 1.0},
    "log_offset": 0.0,
}
_ELLIPTICAL_DEFAULTS = {
    "prior": {"kind": "gaussian", "mean": 0.0, "cov": {"scalar": 1.0}},
    "profile": {"kind": "gaussian"},
    "map": {"kind": "seeded", "a_max": 1.0, "seed": 0, "nonlinearity": "tanh"},
    "r_matrix": {"scalar": 1.0},
    "log_offset": 0.0,
}
_PROFILE_PARAMS = {
    "gaussian": (),
    "gen_gaussian": ("beta",),
    "laplace": (),
    "sub_gaussian": ("a",),
    "student_t": ("nu",),
    "cauchy": (),
    "pearson7": ("lambda", "alpha"),
    "gen_cauchy": ("p", "alpha"),
}


def _check_keys(section: Dict[str, Any], allowed, path: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(path, f"expected a mapping, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else str(key), "unknown key")


def _float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _int(value, path: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(path, f"expected an integer >= {minimum}, got {value!r}")
    return value


def _float_or_list(value, path: str):
    if isinstance(value, list):
        return [_float(v, f"{path}[{i}]") for i, v in enumerate(value)]
    return _float(value, path)


def _normalize_matrix(spec, path: str) -> Dict[str, Any]:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return {"scalar": float(spec)}
    _check_keys(spec, MATRIX_FORMS, path)
    if len(spec) != 1:
        raise ConfigError(path, f"give exactly one of {MATRIX_FORMS}")
    (form, value), = spec.items()
    if form == "scalar":
        return {"scalar": _float(value, f"{path}.scalar")}
    if form == "diagonal":
        return {"diagonal": _float_or_list(value, f"{path}.diagonal")}
    if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
        raise ConfigError(f"{path}.dense", "expected a list of rows")
    return {"dense": [[_float(v, f"{path}.dense[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(value)]}


def _normalize_profile(spec, path: str) -> Dict[str, Any]:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind not in _PROFILE_PARAMS:
        raise ConfigError(f"{path}.kind", f"must be one of {sorted(_PROFILE_PARAMS)}, got {kind!r}")
    params = _PROFILE_PARAMS[kind]
    _check_keys(spec, ("kind",) + params, path)
    out: Dict[str, Any] = {"kind": kind}
    for name in params:
        if name not in spec:
            raise ConfigError(f"{path}.{name}", f"required for profile '{kind}'")
        out[name] = _int(spec[name], f"{path}.{name}", 1) if name == "p" else _float(spec[name], f"{path}.{name}")
    return out


def _normalize_prior(spec, path: str) -> Dict[str, Any]:
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind == "gaussian":
        _check_keys(spec, ("kind", "mean", "cov"), path)
        return {
            "kind": "gaussian",
            "mean": _float_or_list(spec.get("mean", 0.0), f"{path}.mean"),
            "cov": _normalize_matrix(spec.get("cov", {"scalar": 1.0}), f"{path}.cov"),
        }
    if kind == "uniform_box":
        _check_keys(spec, ("kind", "lo", "hi"), path)
        return {
            "kind": "uniform_box",
            "lo": _float_or_list(spec.get("lo", -1.0), f"{path}.lo"),
            "hi": _float_or_list(spec.get("hi", 1.0), f"{path}.hi"),
        }
    raise ConfigError(f"{path}.kind", f"must be 'gaussian' or 'uniform_box', got {kind!r}")


def _normalize_map(spec, path: str) -> Dict[str, Any]:
    kind = spec.get("kind") if isinstance(spec, dict) else None
    nonlinearity = spec.get("nonlinearity", "tanh") if isinstance(spec, dict) else None
    if nonlinearity not in NONLINEARITIES:
        raise ConfigError(f"{path}.nonlinearity", f"must be one of {sorted(NONLINEARITIES)}, got {nonlinearity!r}")
    if kind == "coeffs":
        _check_keys(spec, ("kind", "coeffs", "nonlinearity"), path)
        coeffs = _normalize_matrix({"dense": spec.get("coeffs")}, path)["dense"]
        return {"kind": "coeffs", "coeffs": coeffs, "nonlinearity": nonlinearity}
    if kind == "seeded":
        _check_keys(spec, ("kind", "a_max", "seed", "nonlinearity"), path)
        return {
            "kind": "seeded",
            "a_max": _float(spec.get("a_max", 1.0), f"{path}.a_max"),
            "seed": _int(spec.get("seed", 0), f"{path}.seed"),
            "nonlinearity": nonlinearity,
        }
    raise ConfigError(f"{path}.kind", f"must be 'coeffs' or 'seeded', got {kind!r}")


def _normalize_a_matrix(spec, path: str) -> Dict[str, Any]:
    _check_keys(spec, ("dense", "seeded_scaled", "zero"), path)
    if len(spec) != 1:
        raise ConfigError(path, "give exactly one of dense, seeded_scaled, zero")
    if "dense" in spec:
        return _normalize_matrix(spec, path)
    if "seeded_scaled" in spec:
        return {"seeded_scaled": _int(spec["seeded_scaled"], f"{path}.seeded_scaled")}
    if spec["zero"] is not True:
        raise ConfigError(f"{path}.zero", "must be true")
    return {"zero": True}


def normalize_model_spec(raw: Dict[str, Any], path: str = "model") -> Dict[str, Any]:
    """Validates keys and fills defaults; the result round-trips through YAML unchanged."""
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping")
    model_type = raw.get("type")
    if model_type not in MODEL_TYPES:
        raise ConfigError(f"{path}.type", f"must be one of {MODEL_TYPES}, got {model_type!r}")
    defaults = _LG_DEFAULTS if model_type == "linear_gaussian" else _ELLIPTICAL_DEFAULTS
    _check_keys(raw, ("type", "dx", "dy") + tuple(defaults), path)
    merged = dict(defaults)
    merged.update({k: v for k, v in raw.items() if k not in ("type", "dx", "dy")})

    spec: Dict[str, Any] = {
        "type": model_type,
        "dx": _int(raw.get("dx", 1), f"{path}.dx", 1),
        "dy": _int(raw.get("dy", 1), f"{path}.dy", 1),
        "log_offset": _float(merged["log_offset"], f"{path}.log_offset"),
        "r_matrix": _normalize_matrix(merged["r_matrix"], f"{path}.r_matrix"),
    }
    if model_type == "linear_gaussian":
        spec["mu_x"] = _float_or_list(merged["mu_x"], f"{path}.mu_x")
        spec["sigma_x"] = _normalize_matrix(merged["sigma_x"], f"{path}.sigma_x")
        spec["a_matrix"] = _normalize_a_matrix(merged["a_matrix"], f"{path}.a_matrix")
    else:
        spec["prior"] = _normalize_prior(merged["prior"], f"{path}.prior")
        spec["profile"] = _normalize_profile(merged["profile"], f"{path}.profile")
        spec["map"] = _normalize_map(merged["map"], f"{path}.map")
    return spec


def matrix_from_spec(spec: Dict[str, Any], dim: int, what: str) -> np.ndarray:
    if "scalar" in spec:
        return spec["scalar"] * np.eye(dim)
    if "diagonal" in spec:
        diagonal = np.asarray(spec["diagonal"], dtype=float).reshape(-1)
        if diagonal.size == 1:
            diagonal = np.full(dim, diagonal[0])
        if diagonal.size != dim:
            raise DimensionMismatch(what, dim, diagonal.size)
        return np.diag(diagonal)
    dense = np.asarray(spec["dense"], dtype=float)
    if dense.shape != (dim, dim):
        raise DimensionMismatch(what, (dim, dim), dense.shape)
    return dense


def seeded_scaled_matrix(seed: int, d_x: int, d_y: int) -> np.ndarray:
    """A_ij i.i.d. uniform on [-1, 1] / sqrt(d_x), keeping A sigma_x A^T bounded as d_x grows."""
    generator = RandomStream(seed, (d_x, d_y)).generator
    return generator.uniform(-1.0, 1.0, size=(d_y, d_x)) / math.sqrt(d_x)


def _a_matrix(spec: Dict[str, Any], d_x: int, d_y: int) -> np.ndarray:
    if "zero" in spec:
        return np.zeros((d_y, d_x))
    if "seeded_scaled" in spec:
        return seeded_scaled_matrix(spec["seeded_scaled"], d_x, d_y)
    dense = np.asarray(spec["dense"], dtype=float)
    if dense.shape != (d_y, d_x):
        raise DimensionMismatch("a_matrix", (d_y, d_x), dense.shape)
    return dense


def build_profile(spec: Dict[str, Any], d_y: int) -> RadialProfile:
    kind = spec["kind"]
    if kind == "gaussian":
        return RadialProfile.gaussian()
    if kind == "laplace":
        return RadialProfile.laplace()
    if kind == "gen_gaussian":
        return RadialProfile.gen_gaussian(spec["beta"])
    if kind == "sub_gaussian":
        return RadialProfile.sub_gaussian(spec["a"])
    if kind == "student_t":
        return RadialProfile.student_t(spec["nu"], d_y)
    if kind == "cauchy":
        return RadialProfile.cauchy(d_y)
    if kind == "pearson7":
        return RadialProfile.pearson7(spec["lambda"], spec["alpha"])
    return RadialProfile.gen_cauchy(spec["p"], spec["alpha"])


def _build_prior(spec: Dict[str, Any], d_x: int):
    if spec["kind"] == "gaussian":
        return GaussianPrior(spec["mean"], spd_factor(matrix_from_spec(spec["cov"], d_x, "prior.cov")))
    lo, hi = (np.asarray(spec[key], dtype=float) for key in ("lo", "hi"))
    if lo.ndim == 0:
        lo = np.full(d_x, float(lo))
    prior = UniformBoxPrior(lo, hi)
    if prior.dim != d_x:
        raise DimensionMismatch("uniform box prior", d_x, prior.dim)
    return prior


def _build_map(spec: Dict[str, Any], d_x: int, d_y: int) -> SaturatingObservationMap:
    if spec["kind"] == "seeded":
        return SaturatingObservationMap.seeded(d_x, d_y, spec["a_max"], spec["seed"], spec["nonlinearity"])
    coeffs = np.asarray(spec["coeffs"], dtype=float)
    if coeffs.shape != (d_y, d_x):
        raise DimensionMismatch("observation map coefficients", (d_y, d_x), coeffs.shape)
    return SaturatingObservationMap(coeffs, spec["nonlinearity"])


def build_model(spec: Dict[str, Any], d_x: Optional[int] = None, d_y: Optional[int] = None):
    """Assembles the model a normalized spec describes, optionally at other dimensions."""
    d_x = spec["dx"] if d_x is None else d_x
    d_y = spec["dy"] if d_y is None else d_y
    r = spd_factor(matrix_from_spec(spec["r_matrix"], d_y, "r_matrix"))
    if spec["type"] == "linear_gaussian":
        model = LinearGaussianModel(
            mu_x=spec["mu_x"],
            sigma_x=spd_factor(matrix_from_spec(spec["sigma_x"], d_x, "sigma_x")),
            a=_a_matrix(spec["a_matrix"], d_x, d_y),
            r=r,
            log_offset=spec["log_offset"],
        )
    else:
        model = EllipticalModel(
            prior=_build_prior(spec["prior"], d_x),
            obs_map=_build_map(spec["map"], d_x, d_y),
            profile=build_profile(spec["profile"], d_y),
            r=r,
            log_offset=spec["log_offset"],
        )
    logger.info("built %s model d_x=%d d_y=%d", spec["type"], d_x, d_y)
    return model


def model_dims(spec: Dict[str, Any], axis: str, axis_value: int):
    """(d_x, d_y) for one grid value of a sweep."""
    if axis == "d_x":
        return axis_value, spec["dy"]
    if axis == "d_y":
        return spec["dx"], axis_value
    return spec["dx"], spec["dy"]
