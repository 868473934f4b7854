"""Flat key-value configuration files.

Format: one `key = value` per line; `#` starts a comment; values are either
a single token or a space-separated vector. Keys are case-sensitive.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def get_float(cfg: dict, key: str, default=None) -> float:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}", key=key)
        return float(default)
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {cfg[key]!r} as a number", key=key) from exc


def get_int(cfg: dict, key: str, default=None) -> int:
    value = get_float(cfg, key, default)
    if value != int(value):
        raise ConfigError(f"key {key!r}: expected an integer, got {value}", key=key)
    return int(value)


def get_vector(cfg: dict, key: str, default=None) -> np.ndarray:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}", key=key)
        return np.asarray(default, dtype=float)
    try:
        return np.array([float(tok) for tok in cfg[key].split()], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {cfg[key]!r} as a vector", key=key) from exc


def get_str(cfg: dict, key: str, default=None) -> str:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}", key=key)
        return default
    return cfg[key]
