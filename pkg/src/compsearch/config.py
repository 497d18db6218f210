"""Flat key-value run configuration (TOML)."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .datasets import DEFAULT_TASKS, TaskSpec, register_task
from .dsl import ComponentKind
from .evaluator import ProtocolConfig
from .generators import PROMPT_STYLES, EndpointConfig
from .ranker import RankerConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LoopConfig:
    kind: str = "activation"
    prompt_style: str = "IEP"
    source: str = "corpus"  # corpus | random | llm
    corpus: str = ""
    batch_size: int = 20
    top_k: int = 20
    iteration2_batch: int = 0
    runs: int = 3
    protocol_mode: str = "one-epoch"
    learning_rate: float = 0.01
    train_batch_size: int = 16
    validation_fraction: float = 0.2
    tasks: tuple[str, ...] = DEFAULT_TASKS
    baseline_set: str = ""
    random_shuffles: int = 100
    alpha: float = 0.5
    diversity_k: int = 12
    window: int = 50
    seed: int = 0
    ranker_max_pairs: int = 5000
    ranker_epochs: int = 200
    ranker_step: float = 0.05
    ranker_batch_pairs: int = 64
    pooling: str = "cells"
    efficiency_aggregate: str = "sum"
    n_score: str = "mean"
    llm_url: str = ""
    llm_model: str = ""
    llm_api_key_env: str = "COMPSEARCH_API_KEY"
    llm_temperature: float = 0.7
    llm_max_retries: int = 3
    llm_max_connections: int = 4
    extra_tasks: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        try:
            kind = ComponentKind(self.kind)
        except ValueError:
            raise ConfigError(f"unknown component kind {self.kind!r}") from None
        if not self.baseline_set:
            object.__setattr__(self, "baseline_set", f"{kind.value}-default")
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "extra_tasks", tuple(self.extra_tasks))
        if self.prompt_style not in PROMPT_STYLES:
            raise ConfigError(f"prompt_style must be one of {PROMPT_STYLES}")
        if self.source not in ("corpus", "random", "llm"):
            raise ConfigError(f"unknown source {self.source!r}")
        if self.batch_size < 0 or self.iteration2_batch < 0:
            raise ConfigError("batch sizes must be >= 0")
        if self.top_k < 1 or (self.iteration2_batch and self.top_k > self.iteration2_batch):
            raise ConfigError("need 1 <= top_k <= iteration2_batch")
        if self.window < 1 or self.random_shuffles < 1:
            raise ConfigError("window and random_shuffles must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must be in [0, 1]")
        if self.pooling not in ("cells", "pairs"):
            raise ConfigError("pooling must be 'cells' or 'pairs'")
        if self.efficiency_aggregate not in ("sum", "mean") or self.n_score not in ("mean", "min"):
            raise ConfigError("efficiency_aggregate must be sum|mean and n_score mean|min")

    @property
    def component_kind(self) -> ComponentKind:
        return ComponentKind(self.kind)

    @property
    def protocol(self) -> ProtocolConfig:
        try:
            return ProtocolConfig(self.protocol_mode, self.learning_rate, self.train_batch_size, self.runs,
                                  self.validation_fraction)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def ranker(self) -> RankerConfig:
        return RankerConfig(self.ranker_max_pairs, self.ranker_epochs, self.ranker_step, self.ranker_batch_pairs)

    @property
    def endpoint(self) -> EndpointConfig:
        if not self.llm_url or not self.llm_model:
            raise ConfigError("llm source needs llm_url and llm_model")
        return EndpointConfig(self.llm_url, self.llm_model, self.llm_api_key_env, self.llm_temperature,
                              self.llm_max_retries, self.llm_max_connections)

    def to_json(self) -> dict:
        data = dataclasses.asdict(self)
        data["tasks"] = list(self.tasks)
        data["extra_tasks"] = list(self.extra_tasks)
        return data


def _parse_extra_task(text: str) -> TaskSpec:
    # "<task id>:<csv file>:<classification|regression>:<n features>[:<n classes>]"
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ConfigError(f"bad extra task definition {text!r}")
    n_classes = int(parts[4]) if len(parts) == 5 else None
    return TaskSpec(parts[0], parts[1], parts[2], int(parts[3]), n_classes)


def config_from_mapping(data: dict, base_dir: Path | None = None) -> LoopConfig:
    fields = {f.name for f in dataclasses.fields(LoopConfig)}
    unknown = sorted(set(data) - fields)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    data = dict(data)
    if data.get("corpus") and base_dir is not None and not Path(data["corpus"]).is_absolute():
        data["corpus"] = str((base_dir / data["corpus"]).resolve())
    try:
        config = LoopConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    for spec in config.extra_tasks:
        register_task(_parse_extra_task(spec))
    return config


def load_config(path: Path | str | None, **overrides) -> LoopConfig:
    data: dict = {}
    base_dir = None
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        base_dir = path.parent
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(data, base_dir)
