"""Run configuration: presets < TOML file < command-line flags."""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .hashing import DEFAULT_SEEDS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_ENV = "TOWERTOPK_CONFIG"

SKETCHES = ("tower6", "tower3", "tower", "cmcu", "cs")
QUEUES = ("pqa", "ppq")

PRESETS: dict[str, dict[str, Any]] = {
    "paper-tower6-pqa6": {"sketch": "tower6", "queue": "pqa", "slots": 6},
    "paper-pqa4": {"sketch": "tower6", "queue": "pqa", "slots": 4},
    "paper-ppq": {"sketch": "tower6", "queue": "ppq"},
    "paper-tower3": {"sketch": "tower3", "queue": "ppq"},
    "paper-cmcu": {"sketch": "cmcu", "queue": "ppq", "rows": 12, "width": 1 << 15},
    "paper-cs": {"sketch": "cs", "queue": "ppq", "rows": 12, "width": 1 << 15},
}
DEFAULT_PRESET = "paper-tower6-pqa6"


@dataclass
class RunConfig:
    sketch: str = "tower6"
    m: int | None = None  # tower bit budget per row; preset default when None
    layout: list[list[int]] | None = None  # custom tower: [[delta, n_rows], ...]
    rows: int = 12  # cmcu / cs
    width: int = 1 << 15
    queue: str = "pqa"
    k: int = 1024
    slots: int = 6
    queues: int | None = None  # PQA R; K/4 when None
    seeds: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_SEEDS))
    reuse_row0_hash: bool = False
    window: int | None = None
    input: str | None = None
    input_format: str = "auto"
    keep_other: bool = False
    out_json: str | None = None
    out_csv: str | None = None
    preset: str | None = None

    @property
    def n_queues(self) -> int:
        return self.queues if self.queues is not None else max(self.k // 4, 1)

    @property
    def capacity(self) -> int:
        return self.n_queues * self.slots if self.queue == "pqa" else self.k

    def validate(self) -> RunConfig:
        if self.sketch not in SKETCHES:
            raise ConfigError(f"unknown sketch {self.sketch!r}; choose from {SKETCHES}")
        if self.queue not in QUEUES:
            raise ConfigError(f"unknown queue {self.queue!r}; choose from {QUEUES}")
        if self.k < 1:
            raise ConfigError("k must be positive")
        if self.queue == "pqa":
            r = self.n_queues
            if r < 1 or r & (r - 1):
                raise ConfigError(f"PQA queue count {r} is not a power of two")
            if self.slots < 1:
                raise ConfigError("slots must be positive")
            if self.k > self.capacity:
                raise ConfigError(f"k={self.k} exceeds PQA capacity {self.capacity}")
        if self.window is not None and self.window < 1:
            raise ConfigError("window must be a positive packet count")
        missing = {f"row{i}" for i in range(6)} | {"queue", "baseline"}
        missing -= set(self.seeds)
        if missing:
            raise ConfigError(f"seed table missing {sorted(missing)}")
        return self

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _apply(cfg: RunConfig, overrides: dict[str, Any], source: str) -> None:
    for key, value in overrides.items():
        if key not in _FIELDS:
            raise ConfigError(f"{source}: unknown option {key!r}")
        if key == "seeds":
            if not isinstance(value, dict):
                raise ConfigError(f"{source}: seeds must be a table")
            cfg.seeds.update({k: int(v) & 0xFFFFFFFF for k, v in value.items()})
        else:
            setattr(cfg, key, value)


def load_config_file(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None


def resolve_config(preset: str | None = None, config_path: str | Path | None = None,
                   flags: dict[str, Any] | None = None) -> RunConfig:
    """Build a validated config. Later sources override earlier ones."""
    file_values: dict[str, Any] = {}
    if config_path is None:
        config_path = os.environ.get(CONFIG_ENV) or None
    if config_path is not None:
        file_values = load_config_file(config_path)
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    name = flags.pop("preset", None) or preset or file_values.pop("preset", None) or DEFAULT_PRESET
    file_values.pop("preset", None)
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = RunConfig(preset=name)
    _apply(cfg, PRESETS[name], f"preset {name}")
    _apply(cfg, file_values, str(config_path))
    _apply(cfg, flags, "flags")
    return cfg.validate()
