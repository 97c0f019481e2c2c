"""Runtime settings: defaults, optional config file, environment overrides.

Precedence is defaults < file < ``EXPANDOC_*`` environment variables. The
file may be YAML or JSON (JSON parses as YAML). Unknown keys fail loudly so
typos do not silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import yaml

from .errors import ValidationFailedError
from .llm import DEFAULT_RESPONSE_LENGTH

PALETTE_VARIANTS = ("base", "refined")

ENV_PREFIX = "EXPANDOC_"


@dataclass(frozen=True)
class Settings:
    # model routing: answering uses a cheaper model than extraction
    answerer_model: str = "gpt-3.5-turbo-1106"
    extractor_model: str = "gpt-4-1106-preview"
    embedding_model: str = "all-mpnet-base-v2"
    embedding_dim: int = 256  # hashing embedder only; HTTP clients learn theirs

    # retrieval and chunking
    top_k_chunks: int = 12
    chunk_size: int = 3
    chunk_overlap: int = 2
    batch_size: int = 32

    # expansion behavior
    max_depth: int = 8
    max_anchor_words: int = 6
    cache_ttl_s: float = 600.0
    palette_variant: str = "base"
    response_length: str = DEFAULT_RESPONSE_LENGTH

    # generation
    temperature: float = 0.0
    max_output_tokens: int = 750

    # storage and services
    data_dir: str = "data"
    parser_url: Optional[str] = None
    embedding_url: Optional[str] = None
    llm_url: Optional[str] = None
    llm_api_key: Optional[str] = None

    def __post_init__(self):
        if self.palette_variant not in PALETTE_VARIANTS:
            raise ValidationFailedError(
                f"palette_variant must be one of {PALETTE_VARIANTS}, got {self.palette_variant!r}"
            )
        if self.max_depth < 1:
            raise ValidationFailedError("max_depth must be >= 1")
        if self.top_k_chunks < 1:
            raise ValidationFailedError("top_k_chunks must be >= 1")
        if self.max_anchor_words < 1:
            raise ValidationFailedError("max_anchor_words must be >= 1")


_FIELDS = {f.name: f for f in dataclasses.fields(Settings)}


def _coerce(name: str, raw: str):
    target = _FIELDS[name].type
    try:
        if target == "int":
            return int(raw)
        if target == "float":
            return float(raw)
    except ValueError as exc:
        raise ValidationFailedError(f"setting {name} expects a number, got {raw!r}") from exc
    return raw


def load_settings(
    path: Optional[str | Path] = None, env: Optional[Mapping[str, str]] = None
) -> Settings:
    env = os.environ if env is None else env
    values: dict = {}

    if path is not None:
        text = Path(path).read_text("utf-8")
        loaded = yaml.safe_load(text) or {}
        if not isinstance(loaded, dict):
            raise ValidationFailedError(f"config file {path} must contain a mapping")
        for key, value in loaded.items():
            if key not in _FIELDS:
                raise ValidationFailedError(f"unknown setting in config file: {key!r}")
            values[key] = value

    for name in _FIELDS:
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            values[name] = _coerce(name, env[env_key])

    return Settings(**values)
