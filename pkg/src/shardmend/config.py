"""Declarative pipeline configuration: JSON profile plus CLI overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import ConfigError


@dataclass(frozen=True)
class ScheduleConfig:
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    kind: str = "linear"


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 500
    batch_size: int = 8
    learning_rate: float = 1e-4
    seed: int | None = None


@dataclass(frozen=True)
class AugmentationConfig:
    cuts_per_object: int = 4
    height_bounds: tuple[float, float] = (0.18, 0.22)
    max_angle: float = 30.0


@dataclass(frozen=True)
class EvaluationConfig:
    m: int = 820
    seed: int | None = None


@dataclass(frozen=True)
class PipelineConfig:
    points_broken: int = 8192
    points_repair: int = 820
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def check(self) -> None:
        if self.points_broken < 1:
            raise ConfigError(f"points_broken must be positive, got {self.points_broken}")
        if self.points_repair < 1:
            raise ConfigError(f"points_repair must be positive, got {self.points_repair}")
        s = self.schedule
        if s.T < 1:
            raise ConfigError(f"schedule.T must be >= 1, got {s.T}")
        if not (0.0 < s.beta_start <= s.beta_end < 1.0):
            raise ConfigError(
                f"schedule betas must satisfy 0 < beta_start <= beta_end < 1, "
                f"got [{s.beta_start}, {s.beta_end}]"
            )
        if s.kind != "linear":
            raise ConfigError(f"schedule.kind must be 'linear', got {s.kind!r}")
        t = self.training
        if t.epochs < 1:
            raise ConfigError(f"training.epochs must be >= 1, got {t.epochs}")
        if t.batch_size < 1:
            raise ConfigError(f"training.batch_size must be >= 1, got {t.batch_size}")
        if t.learning_rate <= 0:
            raise ConfigError(f"training.learning_rate must be positive, got {t.learning_rate}")
        a = self.augmentation
        if a.cuts_per_object < 1:
            raise ConfigError(f"augmentation.cuts_per_object must be >= 1, got {a.cuts_per_object}")
        low, high = a.height_bounds
        if not (0.0 < low <= high < 1.0):
            raise ConfigError(
                f"augmentation.height_bounds must satisfy 0 < low <= high < 1, got [{low}, {high}]"
            )
        if not (0.0 < a.max_angle < 90.0):
            raise ConfigError(f"augmentation.max_angle must be in (0, 90), got {a.max_angle}")
        if self.evaluation.m < 1:
            raise ConfigError(f"evaluation.m must be >= 1, got {self.evaluation.m}")


def _build(section, cls, path):
    known = {f for f in cls.__dataclass_fields__}
    for key in section:
        if key not in known:
            raise ConfigError(f"unknown config field {path}.{key}")
    return cls(**section)


def config_from_dict(doc: dict) -> PipelineConfig:
    doc = dict(doc)
    sections = {}
    for name, cls in (
        ("schedule", ScheduleConfig),
        ("training", TrainingConfig),
        ("augmentation", AugmentationConfig),
        ("evaluation", EvaluationConfig),
    ):
        raw = doc.pop(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"config section {name} must be an object")
        if name == "augmentation" and "height_bounds" in raw:
            raw = dict(raw)
            raw["height_bounds"] = tuple(raw["height_bounds"])
        sections[name] = _build(raw, cls, name)
    known = {"points_broken", "points_repair"}
    for key in doc:
        if key not in known:
            raise ConfigError(f"unknown config field {key}")
    cfg = PipelineConfig(
        points_broken=doc.get("points_broken", 8192),
        points_repair=doc.get("points_repair", 820),
        **sections,
    )
    cfg.check()
    return cfg


def load_config(path) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return config_from_dict(doc)


def override(cfg: PipelineConfig, **updates) -> PipelineConfig:
    """Apply flat CLI overrides like training_epochs=300; None values are ignored."""
    top: dict = {}
    nested: dict[str, dict] = {}
    for key, value in updates.items():
        if value is None:
            continue
        if "_" in key and key.split("_", 1)[0] in ("schedule", "training", "augmentation",
                                                   "evaluation"):
            section, fname = key.split("_", 1)
            nested.setdefault(section, {})[fname] = value
        else:
            top[key] = value
    for section, fields in nested.items():
        top[section] = replace(getattr(cfg, section), **fields)
    cfg = replace(cfg, **top)
    cfg.check()
    return cfg
