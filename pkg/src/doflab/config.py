"""Config-file schema for the experiment runner.

Configs are YAML mappings with a fixed vocabulary per section; unknown keys
are rejected so typos fail loudly before any compute starts.
"""

from __future__ import annotations

from dataclasses import replace

import yaml

from .data import GENERATOR_VARIANTS, GeneratorSpec
from .decomposition import ShiftSpec
from .estimator import EstimatorConfig
from .predictors import FAMILIES, PredictorSpec

__all__ = [
    "ConfigError",
    "build_estimator",
    "build_generator",
    "build_predictor",
    "build_shift",
    "load_config",
    "validate_config",
]

_KINDS = ("sweep", "asymptotics", "decompose", "reproduce")

_SECTIONS = {
    "top": {"kind", "seed", "output", "workers", "generator", "predictor", "sweep",
            "estimator", "theory", "mc", "shift", "figure"},
    "generator": {"variant", "n", "p", "rho", "sigma", "s", "alpha", "delta",
                  "latent_p", "x_entries", "rf_scale", "noise"},
    "predictor": {"family", "lam", "k", "max_leaves", "n_trees", "split_features",
                  "out_features", "latent_features"},
    "estimator": {"reps", "test_size", "sigma2", "proxy_grid", "fixed_x",
                  "fixed_x_inner", "fixed_x_outer"},
    "sweep": {"parameter", "values", "points", "nested_features"},
    "theory": {"model", "spectrum", "signal", "sigma2", "sigma2_nl", "grid", "gamma", "lam"},
    "spectrum": {"kind", "p", "rho", "signal_energy", "nonlinear"},
    "signal": {"law", "delta", "amplitude"},
    "grid": {"parameter", "values"},
    "shift": {"scale", "offset"},
    "mc": {"generator", "predictor", "estimator"},
    "proxy_grid": {"family", "parameter", "values"},
}

_SWEEP_PARAMETERS = ("lam", "k", "max_leaves", "n_trees", "p", "out_features")


class ConfigError(Exception):
    """Invalid or unknown configuration content."""


def _require_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(obj).__name__}")
    return obj


def _check_keys(section: dict, name: str, where: str = "") -> None:
    allowed = _SECTIONS[name]
    unknown = set(section) - allowed
    if unknown:
        loc = where or name
        raise ConfigError(f"unknown key(s) in {loc}: {sorted(unknown)}; allowed: {sorted(allowed)}")


def validate_config(cfg: dict) -> dict:
    """Reject unknown keys and structurally impossible values; returns cfg."""
    cfg = _require_mapping(cfg, "config")
    _check_keys(cfg, "top", "top level")
    kind = cfg.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"kind must be one of {_KINDS}, got {kind!r}")
    if kind == "reproduce":
        if "figure" not in cfg:
            raise ConfigError("reproduce config needs a figure id")
        return cfg
    for key, section in (("generator", "generator"), ("predictor", "predictor"),
                         ("estimator", "estimator"), ("sweep", "sweep"),
                         ("shift", "shift"), ("theory", "theory")):
        if key in cfg:
            _check_keys(_require_mapping(cfg[key], key), section)
    if "estimator" in cfg and isinstance(cfg["estimator"].get("proxy_grid"), dict):
        _check_keys(cfg["estimator"]["proxy_grid"], "proxy_grid")
    if "theory" in cfg:
        theory = cfg["theory"]
        for key in ("spectrum", "signal", "grid"):
            if key in theory:
                _check_keys(_require_mapping(theory[key], f"theory.{key}"), key)
    if "mc" in cfg:
        mc = _require_mapping(cfg["mc"], "mc")
        _check_keys(mc, "mc")
        for key in ("generator", "predictor", "estimator"):
            if key in mc:
                _check_keys(_require_mapping(mc[key], f"mc.{key}"), key)
    if "sweep" in cfg:
        sweep = cfg["sweep"]
        param = sweep.get("parameter")
        if param is not None and param not in _SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {_SWEEP_PARAMETERS}")
        if "values" not in sweep and "points" not in sweep:
            raise ConfigError("sweep needs values or points")
    return cfg


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raise ConfigError(f"empty config file: {path}")
    return validate_config(raw)


def build_generator(section: dict) -> GeneratorSpec:
    section = _require_mapping(section, "generator")
    if section.get("variant") not in GENERATOR_VARIANTS:
        raise ConfigError(f"generator.variant must be one of {GENERATOR_VARIANTS}")
    try:
        return GeneratorSpec(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad generator section: {exc}") from exc


def build_predictor(section: dict, **overrides) -> PredictorSpec:
    section = dict(_require_mapping(section, "predictor"))
    section.update(overrides)
    if section.get("family") not in FAMILIES:
        raise ConfigError(f"predictor.family must be one of {FAMILIES}")
    try:
        return PredictorSpec(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad predictor section: {exc}") from exc


def build_estimator(section: dict | None, seed: int, reps: int | None = None) -> EstimatorConfig:
    section = dict(section or {})
    section.pop("proxy_grid", None)
    section.pop("fixed_x", None)
    if reps is not None:
        section["reps"] = reps
    sigma2 = section.get("sigma2")
    if sigma2 == "proxy":
        section["sigma2"] = None
    mapping = {"reps": "n_reps", "test_size": "test_size", "sigma2": "sigma2",
               "fixed_x_inner": "fixed_x_inner", "fixed_x_outer": "fixed_x_outer"}
    kwargs = {mapping[k]: v for k, v in section.items() if k in mapping}
    try:
        return EstimatorConfig(seed=seed, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad estimator section: {exc}") from exc


def build_proxy_grid(section: dict | None) -> list[PredictorSpec] | None:
    if not section:
        return None
    family = section["family"]
    param = section["parameter"]
    return [build_predictor({"family": family}, **{param: v}) for v in section["values"]]


def build_shift(section: dict | None) -> ShiftSpec:
    if not section:
        return ShiftSpec()
    offset = section.get("offset", 0.5)
    if isinstance(offset, list):
        offset = tuple(float(v) for v in offset)
    try:
        return ShiftSpec(scale=float(section.get("scale", 1.5)), offset=offset)
    except ValueError as exc:
        raise ConfigError(f"bad shift section: {exc}") from exc


def with_seed(cfg: EstimatorConfig, seed: int) -> EstimatorConfig:
    return replace(cfg, seed=seed)
