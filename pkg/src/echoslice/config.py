"""Application configuration for the CLI and HTTP service.

Loaded from TOML or JSON (by extension). Everything has a default; a
config file only overrides what it names. Sections:

  [tags]            private DICOM tag addresses and source units
  [views.<VIEW>]    per-view cm_per_pix / flips / rotation_deg
  [search]          step sizes, parallelism, ED strategy, A2C rotation sign
  [adapters]        scorer / landmarks endpoints (command or URL), timeout
"""

from __future__ import annotations

import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from .codec import TagConfig
from .errors import EchoSliceError
from .resampler import ViewRenderConfig
from .search import ExtractConfig, StepConfig, default_render_configs


@dataclass(frozen=True)
class AdapterConfig:
    scorer: str | None = None
    landmarks: str | None = None
    timeout: float = 30.0


@dataclass(frozen=True)
class AppConfig:
    tags: TagConfig | None = None
    render_configs: dict[str, ViewRenderConfig] = field(default_factory=default_render_configs)
    steps: StepConfig = StepConfig()
    ed_strategy: str = "first"
    parallelism: int = 1
    a2c_theta_sign: int = 1
    landmark_cm_per_pix: float = 0.05
    adapters: AdapterConfig = AdapterConfig()

    def extract_config(self, render_videos: bool = True) -> ExtractConfig:
        return ExtractConfig(
            render_configs=dict(self.render_configs),
            steps=self.steps,
            ed_strategy=self.ed_strategy,
            parallelism=self.parallelism,
            a2c_theta_sign=self.a2c_theta_sign,
            landmark_config=ViewRenderConfig(cm_per_pix=self.landmark_cm_per_pix),
            render_videos=render_videos,
        )


def _parse(data: dict) -> AppConfig:
    defaults = AppConfig()
    tags = TagConfig.from_dict(data["tags"]) if "tags" in data else None

    render = default_render_configs()
    for view, overrides in data.get("views", {}).items():
        if view not in render:
            raise EchoSliceError(f"unknown view {view!r} in config")
        render[view] = ViewRenderConfig.from_dict({**render[view].to_dict(), **overrides})

    search = data.get("search", {})
    steps = StepConfig(
        d_step=float(search.get("d_step", defaults.steps.d_step)),
        angle_step=float(search.get("angle_step", defaults.steps.angle_step)),
    )
    adapters = data.get("adapters", {})
    return AppConfig(
        tags=tags,
        render_configs=render,
        steps=steps,
        ed_strategy=search.get("ed_strategy", defaults.ed_strategy),
        parallelism=int(search.get("parallelism", defaults.parallelism)),
        a2c_theta_sign=int(search.get("a2c_theta_sign", defaults.a2c_theta_sign)),
        landmark_cm_per_pix=float(search.get("landmark_cm_per_pix",
                                             defaults.landmark_cm_per_pix)),
        adapters=AdapterConfig(
            scorer=adapters.get("scorer"),
            landmarks=adapters.get("landmarks"),
            timeout=float(adapters.get("timeout", 30.0)),
        ),
    )


def load_config(path: str | Path | None) -> AppConfig:
    if path is None:
        return AppConfig()
    path = Path(path)
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            return _parse(tomllib.load(fh))
    if path.suffix == ".json":
        return _parse(json.loads(path.read_text()))
    raise EchoSliceError(f"unsupported config format: {path.suffix!r}")
