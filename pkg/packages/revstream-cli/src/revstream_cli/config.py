"""Run configuration: flags > environment > config file > defaults."""

import logging
import os
import tomllib
from argparse import Namespace
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field
from revstream_core.models import Backend, RenderMode, TokenizerProfile
from revstream_core.utils import optional_env_int, optional_env_str

CONFIG_TABLE = "revstream"

# RunConfig field -> environment variable
ENV_VARS = {
    "seed": "REVSTREAM_SEED",
    "profile": "REVSTREAM_PROFILE",
    "mode": "REVSTREAM_MODE",
    "latency_k": "REVSTREAM_LATENCY_K",
    "workers": "REVSTREAM_WORKERS",
    "backend": "REVSTREAM_BACKEND",
    "log_file": "REVSTREAM_LOG_FILE",
}
_INT_FIELDS = {"seed", "latency_k", "workers"}


class RunConfig(BaseModel):
    command: str | None = None
    seed: int = Field(0, description="Seed for every randomized stage")
    profile: TokenizerProfile = TokenizerProfile.CHAR
    mode: RenderMode = RenderMode.STRICT
    latency_k: int = Field(8, ge=0)
    workers: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    backend: Backend = Backend.POSITIONS
    log_file: str | None = None
    config_file: str | None = None
    options: dict[str, Any] = Field(default_factory=dict, description="Command-specific flags")


def load_config_file(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "rb") as f:
        data = tomllib.load(f)
    values = data.get(CONFIG_TABLE, {})
    logging.debug(f"Loaded {len(values)} setting(s) from {path}")
    return {k: v for k, v in values.items() if k in ENV_VARS}


def env_values() -> dict[str, Any]:
    values: dict[str, Any] = {}
    for name, var in ENV_VARS.items():
        value = optional_env_int(var) if name in _INT_FIELDS else optional_env_str(var)
        if value is not None:
            values[name] = value
    return values


def resolve_config(args: Namespace) -> RunConfig:
    flag_path = getattr(args, "config", None)
    config_path = str(flag_path) if flag_path else optional_env_str("REVSTREAM_CONFIG")
    merged: dict[str, Any] = load_config_file(Path(config_path) if config_path else None)
    merged.update(env_values())

    flags = vars(args)
    for name in ENV_VARS:
        if flags.get(name) is not None:
            merged[name] = flags[name]

    options = {k: (str(v) if isinstance(v, Path) else v) for k, v in flags.items() if k not in ENV_VARS and k not in ("command", "config", "handler")}
    return RunConfig(**merged, command=flags.get("command"), config_file=config_path, options=options)
