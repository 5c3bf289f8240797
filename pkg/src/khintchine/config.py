"""key = value precision profiles."""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

ENV_VAR = "KHINTCHINE_CONFIG"


class ConfigError(ValueError):
    pass


def _coerce(raw: str):
    for kind in (int, float):
        try:
            return kind(raw)
        except ValueError:
            pass
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    return raw


def parse_config(text: str, source: str = "<string>") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        out[key] = _coerce(value)
    return out


def default_config() -> dict:
    text = resources.files(__package__).joinpath("defaults.conf").read_text(encoding="utf-8")
    return parse_config(text, "defaults.conf")


def load_config(path: str | os.PathLike | None = None) -> dict:
    """Bundled defaults, overlaid with ``path`` or $KHINTCHINE_CONFIG if set.

    An override may only set keys that the defaults define, and must keep
    their type (an int key accepts only ints, a float key ints or floats).
    """
    settings = default_config()
    path = path or os.environ.get(ENV_VAR) or None
    if path is None:
        return settings
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    for key, value in parse_config(text, str(path)).items():
        if key not in settings:
            raise ConfigError(f"{path}: unknown key {key!r}")
        base = settings[key]
        if isinstance(base, float) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if type(value) is not type(base):
            raise ConfigError(f"{path}: {key} expects {type(base).__name__}, got {value!r}")
        settings[key] = value
    return settings
