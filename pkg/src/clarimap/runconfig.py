"""Flat key=value run configuration files.

One assignment per line, ``#`` comments and blank lines ignored.  Keys
are ModelConfig field names; values are coerced to the field's type, so
a file can override any training default.  The effective configuration
is echoed back into output artifacts via format_runconfig.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .model.config import ModelConfig

__all__ = [
    "BadConfigLine",
    "UnknownConfigKey",
    "parse_runconfig",
    "load_runconfig",
    "config_from_file",
    "format_runconfig",
]


class BadConfigLine(ValueError):
    pass


class UnknownConfigKey(ValueError):
    pass


_FIELDS = {f.name: f for f in dataclasses.fields(ModelConfig)}


def _coerce(key: str, raw: str):
    if key not in _FIELDS:
        raise UnknownConfigKey(f"unknown config key {key!r}")
    if raw == "none":
        return None
    target = _FIELDS[key].type
    if "bool" in target:
        if raw in ("true", "false"):
            return raw == "true"
        raise BadConfigLine(f"{key} expects true/false, got {raw!r}")
    if "int" in target and "float" not in target:
        try:
            return int(raw)
        except ValueError as e:
            raise BadConfigLine(f"{key} expects an integer, got {raw!r}") from e
    if "float" in target:
        try:
            return float(raw)
        except ValueError as e:
            raise BadConfigLine(f"{key} expects a number, got {raw!r}") from e
    return raw


def parse_runconfig(text: str) -> dict:
    """key=value lines -> coerced override dict."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise BadConfigLine(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = body.partition("=")
        out[key.strip()] = _coerce(key.strip(), raw.strip())
    return out


def load_runconfig(path: str | Path) -> dict:
    return parse_runconfig(Path(path).read_text(encoding="utf-8"))


def config_from_file(path: str | Path | None, **overrides) -> ModelConfig:
    """ModelConfig from an optional file plus keyword overrides (flags win)."""
    merged: dict = {}
    if path is not None:
        merged.update(load_runconfig(path))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return ModelConfig(**merged)


def format_runconfig(config: ModelConfig) -> str:
    """The effective configuration as parseable key=value lines."""
    lines = []
    for f in dataclasses.fields(ModelConfig):
        value = getattr(config, f.name)
        if value is None:
            value = "none"
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
