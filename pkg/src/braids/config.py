"""Run configuration: one YAML document governs all subcommands.

Unknown keys are rejected up front so typos fail before any computation.
"""

from __future__ import annotations

from pathlib import Path

import yaml


class ConfigError(ValueError):
    """Invalid or unknown configuration."""


_SECTION_KEYS = {
    "dataset": {"path", "schema", "delta"},
    "prior": {
        "s_tau",
        "sigma_mu",
        "sigma2_shape",
        "sigma2_rate",
        "intercept_sd",
        "sigma_tau_fixed",
        "sigma_fixed",
    },
    "mcmc": {"n_draws", "n_burn", "thin"},
    "rules": {"n_trees", "max_depth", "min_support"},
    "search": {"mode", "max_depth", "min_leaf", "lambdas", "eta", "max_thresholds"},
    "policy": {"utility", "delta", "c", "max_depth"},
    "calibrate": {
        "depth_law",
        "lambda_depth",
        "alpha",
        "beta",
        "split_rule",
        "sigma_tau",
        "s_tau",
        "m_trees",
        "n_samples",
        "n_rows",
        "n_cols",
    },
    "simulate": {
        "experiment",
        "dgp",
        "sigma",
        "reps",
        "n",
        "n_holdout",
        "alpha",
        "methods",
        "pipelines",
        "calibration_n",
        "calibration_p",
        "mismatch_factor",
        "mcmc_draws",
        "mcmc_burn",
        "min_leaf",
    },
}
_TOP_KEYS = set(_SECTION_KEYS) | {
    "model",
    "observational",
    "prespecified",
    "contrasts",
    "output_dir",
    "seed",
}
_SCHEMA_KEYS = {"outcome", "treatment", "propensity", "covariates"}


def load_config(path: str | Path) -> dict:
    raw = yaml.safe_load(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for section, allowed in _SECTION_KEYS.items():
        sub = raw.get(section)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        bad = set(sub) - allowed
        if bad:
            raise ConfigError(f"unknown keys in {section!r}: {sorted(bad)}")
    if "dataset" in raw and "schema" in raw["dataset"]:
        bad = set(raw["dataset"]["schema"]) - _SCHEMA_KEYS
        if bad:
            raise ConfigError(f"unknown schema keys: {sorted(bad)}")
    return raw
