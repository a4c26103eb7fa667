"""Run configuration: ``key = value`` files, environment overrides with the
ONTOENRICH_ prefix, and per-subcommand schemas that reject unknown keys."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Any, Optional

from .errors import ConfigError

ENV_PREFIX = "ONTOENRICH_"


@dataclass
class Field:
    type: type
    default: Any = None
    required: bool = False
    choices: Optional[tuple] = None


def _parse_value(field: Field, raw: str, key: str):
    try:
        if field.type is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if field.type is list:
            return [int(part) for part in raw.split(",") if part.strip()]
        return field.type(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            key, _, raw = stripped.partition("=")
            values[key.strip()] = raw.strip()
    return values


class RunConfig:
    """Validated view over file values + env + command-line overrides."""

    def __init__(self, subcommand: str, values: dict[str, Any]):
        schema = SCHEMAS.get(subcommand)
        if schema is None:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        unknown = set(values) - set(schema)
        if unknown:
            raise ConfigError(
                f"unknown config key(s) for {subcommand}: {', '.join(sorted(unknown))}"
            )
        self.subcommand = subcommand
        self._values: dict[str, Any] = {}
        for key, field in schema.items():
            if key in values:
                raw = values[key]
                value = (
                    _parse_value(field, raw, key) if isinstance(raw, str) else raw
                )
            elif field.required:
                raise ConfigError(f"{subcommand} requires config key {key!r}")
            else:
                value = field.default
            if field.choices and value not in field.choices:
                raise ConfigError(
                    f"{key} must be one of {field.choices}, got {value!r}"
                )
            self._values[key] = value

    def __getitem__(self, key: str):
        return self._values[key]

    def get(self, key: str, default=None):
        return self._values.get(key, default)

    def as_dict(self) -> dict[str, Any]:
        return dict(self._values)


def load_run_config(
    subcommand: str,
    config_path: Optional[str] = None,
    overrides: Optional[dict[str, str]] = None,
) -> RunConfig:
    """Merge config file < environment < explicit overrides."""
    values: dict[str, Any] = {}
    if config_path:
        if not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path}")
        values.update(read_config_file(config_path))
    schema = SCHEMAS.get(subcommand, {})
    for key in schema:
        env_value = os.environ.get(ENV_PREFIX + key.upper())
        if env_value is not None:
            values[key] = env_value
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(subcommand, values)


_EMBEDDING_KEYS = {
    "embedding": Field(str, "hash", choices=("hash", "sentence-encoder")),
    "embedding_dim": Field(int, 64),
}

_THRESHOLD_KEYS = {
    "threshold_domain": Field(float, 0.25),
    "threshold_pair": Field(float, 0.40),
    "threshold_sufficiency": Field(float, 0.10),
}

SCHEMAS: dict[str, dict[str, Field]] = {
    "dataset": {
        "ontology": Field(str, required=True),
        "ontology_format": Field(str, "triple-tsv", choices=("triple-tsv", "turtle-subset")),
        "endpoint": Field(str, required=True),
        "cache_dir": Field(str, ""),
        "curation": Field(str, ""),
        "none_fraction": Field(float, 0.05),
        "none_strategy": Field(
            str, "keep-least-similar", choices=("keep-least-similar", "keep-most-similar")
        ),
        "parallelism": Field(int, 1),
        "seed": Field(int, 0),
        "output": Field(str, required=True),
        **_EMBEDDING_KEYS,
    },
    "corpus": {
        "dump": Field(str, required=True),
        "dataset": Field(str, required=True),
        "ontology": Field(str, ""),
        "ontology_format": Field(str, "triple-tsv", choices=("triple-tsv", "turtle-subset")),
        "anchor_title": Field(str, required=True),
        "threshold": Field(float, 0.27),
        "output_dir": Field(str, required=True),
    },
    "paths": {
        "corpus_dir": Field(str, required=True),
        "dataset": Field(str, required=True),
        "preparsed": Field(str, ""),
        "parser": Field(str, "preparsed", choices=("preparsed", "spacy")),
        "max_path_len": Field(int, 8),
        "output": Field(str, required=True),
    },
    "train": {
        "paths": Field(str, required=True),
        "hidden_dim": Field(int, 180),
        "ffn_input_dim": Field(int, 120),
        "num_layers": Field(int, 2),
        "embedding_dropout": Field(float, 0.35),
        "hidden_dropout": Field(float, 0.8),
        "epochs": Field(int, 200),
        "learning_rate": Field(float, 0.001),
        "weight_decay": Field(float, 0.001),
        "seed": Field(int, 0),
        "pos_dim": Field(int, 8),
        "dep_dim": Field(int, 8),
        "dir_dim": Field(int, 4),
        "normalize_context": Field(bool, True),
        "holdout_fraction": Field(float, 0.0),
        "output": Field(str, required=True),
        **_EMBEDDING_KEYS,
    },
    "enrich": {
        "model": Field(str, required=True),
        "ontology": Field(str, required=True),
        "ontology_format": Field(str, "triple-tsv", choices=("triple-tsv", "turtle-subset")),
        "page": Field(str, ""),
        "url_list": Field(str, ""),
        "mode": Field(str, "review", choices=("auto", "review")),
        "anchor_text": Field(str, required=True),
        "preparsed": Field(str, ""),
        "parser": Field(str, "preparsed", choices=("preparsed", "spacy")),
        "max_path_len": Field(int, 8),
        "sufficiency": Field(bool, False),
        "queue_dir": Field(str, ""),
        "output": Field(str, ""),
        "turtle_output": Field(str, ""),
        "ontology_output": Field(str, ""),
        "changelog_output": Field(str, ""),
        "seed": Field(int, 0),
        **_EMBEDDING_KEYS,
        **_THRESHOLD_KEYS,
    },
    "eval": {
        "kind": Field(str, required=True, choices=("holdout", "knockout", "webpage")),
        "model": Field(str, ""),
        "dataset": Field(str, ""),
        "paths": Field(str, ""),
        "ontology": Field(str, ""),
        "ontology_format": Field(str, "triple-tsv", choices=("triple-tsv", "turtle-subset")),
        "fraction": Field(float, 0.1),
        "seed": Field(int, 0),
        "preparsed": Field(str, ""),
        "max_path_len": Field(int, 8),
        "answers_dir": Field(str, ""),
        "ks": Field(list, [5, 10, 15, 20]),
        "output": Field(str, ""),
        **_EMBEDDING_KEYS,
    },
    "calibrate": {
        "labeled": Field(str, required=True),
        "anchor_text": Field(str, required=True),
        "grid_step": Field(float, 0.05),
        "output": Field(str, ""),
        **_EMBEDDING_KEYS,
    },
    "serve": {
        "ontology": Field(str, required=True),
        "ontology_format": Field(str, "triple-tsv", choices=("triple-tsv", "turtle-subset")),
        "queue_dir": Field(str, required=True),
        "host": Field(str, "127.0.0.1"),
        "port": Field(int, 8100),
        "token": Field(str, ""),
        "static_dir": Field(str, ""),
        "ontology_output": Field(str, ""),
        "changelog_output": Field(str, ""),
        "model": Field(str, ""),
        "anchor_text": Field(str, "information security"),
        "preparsed": Field(str, ""),
        "parser": Field(str, "preparsed", choices=("preparsed", "spacy")),
        "max_path_len": Field(int, 8),
        "sufficiency": Field(bool, False),
        **_EMBEDDING_KEYS,
        **_THRESHOLD_KEYS,
    },
}


def make_provider(config: RunConfig):
    from .embeddings import HashEmbeddingProvider, SentenceEncoderProvider

    if config["embedding"] == "hash":
        return HashEmbeddingProvider(config["embedding_dim"])
    return SentenceEncoderProvider()
