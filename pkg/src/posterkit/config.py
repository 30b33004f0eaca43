"""Pipeline configuration: file loading (TOML or JSON) plus flag overrides.

Resolution order: built-in defaults, then the config file (``--config``
flag or the ``PK_CONFIG`` environment variable), then explicit CLI
flags. Defaults follow the studied operating point: beta 0.5, gamma
0.5, 512 strips with tau_s 0.5, 96 DPI.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

ENV_CONFIG = "PK_CONFIG"


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 0.5
    lam: float = 0.7
    damping: float = 0.85
    n_strips: int = 512
    tau_s: float = 0.5
    dpi: int = 96
    font_size: float = 10.0
    max_remediation_rounds: int = 3
    scorer: str = "builtin-ngram"
    plugin_command: str = ""
    ngram_order: int = 3
    ngram_k: float = 1.0
    patch_size: int = 28

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma must be in (0, 1]")
        if not 0 < self.lam < 1:
            raise ConfigError("lambda must be in (0, 1)")
        if not 0 < self.damping < 1:
            raise ConfigError("damping must be in (0, 1)")
        if self.max_remediation_rounds < 0:
            raise ConfigError("max_remediation_rounds must be >= 0")
        if self.scorer not in ("builtin-ngram", "plugin"):
            raise ConfigError("scorer must be 'builtin-ngram' or 'plugin'")
        if self.scorer == "plugin" and not self.plugin_command:
            raise ConfigError("scorer 'plugin' requires plugin_command")
        if self.ngram_order < 1 or self.ngram_k <= 0:
            raise ConfigError("ngram_order must be >= 1 and ngram_k > 0")


_FIELD_NAMES = {f.name for f in fields(PipelineConfig)}
_ALIASES = {"lambda": "lam", "lambda_": "lam"}


def _from_mapping(raw: dict) -> PipelineConfig:
    kwargs = {}
    for key, value in raw.items():
        name = _ALIASES.get(key, key)
        if name not in _FIELD_NAMES:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[name] = value
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> PipelineConfig:
    """Load a config file; None falls back to PK_CONFIG, then defaults."""
    if path is None:
        env = os.environ.get(ENV_CONFIG, "").strip()
        if not env:
            return PipelineConfig()
        path = env
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix.lower() == ".toml":
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    elif path.suffix.lower() == ".json":
        raw = json.loads(path.read_text(encoding="utf-8"))
    else:
        raise ConfigError(f"config must be .toml or .json: {path}")
    if not isinstance(raw, dict):
        raise ConfigError("config top level must be a table/object")
    return _from_mapping(raw)


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Replace fields with non-None override values (CLI flags)."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    if not updates:
        return cfg
    return replace(cfg, **updates)
