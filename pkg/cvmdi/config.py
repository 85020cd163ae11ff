"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/config.py
#########################################
"""

from __future__ import annotations

import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import ValidationError

from .errors import ConfigError
from .models import RunConfig

CONFIG_KEYS: tuple[str, ...] = tuple(RunConfig.model_fields)


def _env_path(name: str) -> Path | None:
    raw = os.getenv(name)
    return Path(raw) if raw else None


@dataclass(frozen=True)
class Settings:
    """Process settings; environment variables are read when an instance is built."""

    host: str = field(default_factory=lambda: os.getenv("CVMDI_HOST", "0.0.0.0"))
    port: int = field(default_factory=lambda: int(os.getenv("CVMDI_PORT", "8080")))

    data_dir: Path = field(default_factory=lambda: Path(os.getenv("CVMDI_DATA_DIR", "data")))
    run_log_path: Path | None = field(default_factory=lambda: _env_path("CVMDI_RUN_LOG_PATH"))
    config_path: Path | None = field(default_factory=lambda: _env_path("CVMDI_CONFIG_PATH"))

    workers: int = field(default_factory=lambda: max(1, int(os.getenv("CVMDI_WORKERS", "1"))))


def parse_config_text(text: str) -> dict[str, str]:
    """`key = value` per line, `#` comments, blank lines skipped; duplicates rejected."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        values[key] = value
    return values


def parse_overrides(items: Iterable[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = value
    return out


def build_run_config(values: Mapping[str, object]) -> RunConfig:
    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    try:
        return RunConfig.model_validate(dict(values))
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(str(x) for x in err["loc"]) or "config"
        raise ConfigError(f"{where}: {err['msg']}") from e


def load_run_config(
    path: Path | None = None, overrides: Mapping[str, object] | None = None
) -> RunConfig:
    """File values, then overrides on top; defaults fill the rest."""
    values: dict[str, object] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        values.update(parse_config_text(text))
    values.update(overrides or {})
    return build_run_config(values)
