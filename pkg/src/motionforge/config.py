"""Run configuration: dataset-pipeline defaults plus plugin wiring.

Defaults mirror the production setup this pipeline targets: 49-frame
clips at 480x720, sigma-10 blobs, a 20-track inference cap, 2 px
jitter, and differential dropout (0.3 target / 0.1 conditioning).
Values load from a single TOML file with flag overrides on top.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # py3.10
    import tomli as tomllib

from .errors import ConfigError
from .track_core import latent_shape


@dataclass(frozen=True)
class RunConfig:
    frames: int = 49
    width: int = 720
    height: int = 480
    sigma: float = 10.0
    cap: int = 20
    jitter: float = 2.0
    dropout_target: float = 0.3
    dropout_conditioning: float = 0.1
    interpolation_ratio: float = 0.5
    n_points_min: int = 1
    n_points_max: int = 64
    augment_translate: float = 24.0
    augment_rotate: float = 0.1
    augment_scale_min: float = 0.9
    augment_scale_max: float = 1.1
    max_sample_attempts: int = 100
    seed: int = 0
    fps: float = 16.0
    workers: int = 1
    tracker_plugin: str | None = None
    generator_plugin: str | None = None
    editor_plugin: str | None = None

    def __post_init__(self):
        try:
            latent_shape(self.frames, self.height, self.width)
        except Exception as e:
            raise ConfigError(f"invalid clip geometry: {e}") from e
        if not (1 <= self.n_points_min <= self.n_points_max <= 64):
            raise ConfigError("point-count range must satisfy 1 <= min <= max <= 64")
        for name in ("dropout_target", "dropout_conditioning", "interpolation_ratio"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.cap < 1:
            raise ConfigError("cap must be >= 1")
        if self.jitter < 0 or self.sigma <= 0:
            raise ConfigError("jitter must be >= 0 and sigma > 0")
        if not (0 < self.augment_scale_min <= self.augment_scale_max):
            raise ConfigError("augment scale range must be positive and ordered")

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Load a RunConfig from TOML (single flat table or [pipeline] /
    [plugins] sections), then apply keyword overrides."""
    values: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        for section in ("pipeline", "plugins"):
            if section in data:
                values.update(data.pop(section))
        values.update(data)
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**values)
