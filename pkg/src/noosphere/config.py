"""Service configuration: JSON file, environment overrides, startup validation.

Every field can come from a JSON config file or from a NOOSPHERE_<FIELD>
environment variable (the variable wins). Validation failures abort with a
diagnostic naming the offending field.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

from .errors import DomainError


@dataclass
class Config:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080
    data_dir: str = "./data"
    negligible_max_chars: int = 200
    developed_min_chars: int = 800
    mail_sink: str = "none"  # none | file
    mail_sink_path: str = ""
    tz_offset_minutes: int = 0
    session_ttl_seconds: int = 86400
    admin_secret: str = ""  # seeds the first admin account on an empty store
    collections_file: str = ""  # optional grouping for document export
    front_matter_title: str = "Collaborative notes"
    front_matter_subtitle: str = ""
    front_matter_institution: str = ""
    front_matter_date: str = ""


ENV_PREFIX = "NOOSPHERE_"


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None) -> Config:
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise DomainError("invalid-config", f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise DomainError(
                "invalid-config", f"{path}: line {exc.lineno}: {exc.msg}"
            ) from exc
        if not isinstance(raw, dict):
            raise DomainError("invalid-config", f"{path}: top level must be an object")

    config = Config()
    known = {f.name: f for f in fields(Config)}
    for key, value in raw.items():
        if key not in known:
            raise DomainError("invalid-config", f"unknown config field: {key}")
        setattr(config, key, value)
    for name, f in known.items():
        var = ENV_PREFIX + name.upper()
        if var in env:
            value = env[var]
            if f.type == "int":
                try:
                    value = int(value)
                except ValueError:
                    raise DomainError("invalid-config", f"{var}: not an integer: {value}")
            setattr(config, name, value)
    validate_config(config)
    return config


def validate_config(config: Config) -> None:
    def bad(field_name: str, reason: str):
        return DomainError("invalid-config", f"{field_name}: {reason}")

    for f in fields(Config):
        value = getattr(config, f.name)
        expected = int if f.type == "int" else str
        if not isinstance(value, expected):
            raise bad(f.name, f"expected {expected.__name__}, got {type(value).__name__}")
    if not (0 < config.listen_port < 65536):
        raise bad("listen_port", f"out of range: {config.listen_port}")
    if not config.data_dir:
        raise bad("data_dir", "must be nonempty")
    if not (0 < config.negligible_max_chars < config.developed_min_chars):
        raise bad(
            "negligible_max_chars",
            "need 0 < negligible_max_chars < developed_min_chars",
        )
    if config.mail_sink not in ("none", "file"):
        raise bad("mail_sink", f"must be 'none' or 'file', got {config.mail_sink!r}")
    if config.mail_sink == "file" and not config.mail_sink_path:
        raise bad("mail_sink_path", "required when mail_sink is 'file'")
    if config.session_ttl_seconds <= 0:
        raise bad("session_ttl_seconds", "must be positive")
