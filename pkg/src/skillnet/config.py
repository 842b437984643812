"""Sectioned JSON configuration with standard-run defaults.

One document with optional {retrieval, evolution, curriculum, proposer,
simulation} sections; every omitted field falls back to the standard
defaults baked into the corresponding dataclass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigInvalid, ParseError, SchemaViolation
from .evolution import EvolutionConfig
from .retrieval import DEFAULT_BEAM_WIDTH, DEFAULT_BFS_DEPTH, DEFAULT_K_MAX
from .curriculum import DEFAULT_UNLOCK_THRESHOLD, DEFAULT_WARMUP_LENGTH

_SECTIONS = {"retrieval", "evolution", "curriculum", "proposer", "simulation"}


@dataclass
class RetrievalParams:
    k_max: int = DEFAULT_K_MAX
    depth: int = DEFAULT_BFS_DEPTH
    beam_width: int = DEFAULT_BEAM_WIDTH


@dataclass
class CurriculumParams:
    warmup_length: int = DEFAULT_WARMUP_LENGTH
    unlock_threshold: float = DEFAULT_UNLOCK_THRESHOLD


@dataclass
class ProposerParams:
    endpoint: str | None = None
    model: str = "teacher"
    api_key_env: str = "SKILLNET_API_KEY"
    timeout: float = 30.0
    temperature: float = 0.0
    max_retries: int = 1


@dataclass
class AppConfig:
    retrieval: RetrievalParams = field(default_factory=RetrievalParams)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    curriculum: CurriculumParams = field(default_factory=CurriculumParams)
    proposer: ProposerParams = field(default_factory=ProposerParams)
    simulation: dict[str, Any] = field(default_factory=dict)


def _fill(instance: Any, section: Any, name: str) -> Any:
    if not isinstance(section, dict):
        raise ConfigInvalid(f"{name} section must be an object")
    for key, value in section.items():
        if not hasattr(instance, key):
            raise ConfigInvalid(f"unknown {name} config field {key!r}")
        setattr(instance, key, value)
    return instance


def load_app_config(path: str | Path | None, strict: bool = False) -> AppConfig:
    """Read a config file; a missing path yields pure defaults."""
    config = AppConfig()
    if path is None:
        return config
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc.msg}",
                         line=exc.lineno, column=exc.colno) from exc
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object")
    unknown = set(data) - _SECTIONS
    if unknown and strict:
        raise ConfigInvalid(f"unknown config section(s): {', '.join(sorted(unknown))}")
    _fill(config.retrieval, data.get("retrieval", {}), "retrieval")
    try:
        config.evolution = EvolutionConfig.from_dict(data.get("evolution", {}))
    except SchemaViolation as exc:
        raise ConfigInvalid(str(exc)) from exc
    _fill(config.curriculum, data.get("curriculum", {}), "curriculum")
    _fill(config.proposer, data.get("proposer", {}), "proposer")
    config.simulation = data.get("simulation", {})
    return config
