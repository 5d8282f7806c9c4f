"""One structured config for every stage.

Precedence: dataclass defaults < config file < RELAP_* environment
variables < CLI flags.  Env keys use double underscores for nesting,
e.g. RELAP_TRACKER__HIGH_THRESH=0.7 or RELAP_FPS=30.  The effective config
is echoed into every output artifact for provenance.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional

import yaml

from .color_features import FeaturizeConfig
from .errors import ConfigError, MissingFile
from .scene_builder import SceneConfig
from .similarity import FusionWeights, LapFilter
from .tracker import TrackerConfig

ENV_PREFIX = "RELAP_"

_SECTIONS = {
    "tracker": TrackerConfig,
    "scene": SceneConfig,
    "fusion": FusionWeights,
    "lap": LapFilter,
    "featurize": FeaturizeConfig,
}
_TOP_LEVEL = {"fps": int, "workers": int}


@dataclass(frozen=True)
class PipelineConfig:
    fps: int = 60  # the default lap threshold of 3600 frames assumes 60 fps
    workers: int = 0  # 0 = available parallelism; output never depends on it
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    fusion: FusionWeights = field(default_factory=FusionWeights)
    lap: LapFilter = field(default_factory=LapFilter)
    featurize: FeaturizeConfig = field(default_factory=FeaturizeConfig)

    def to_dict(self) -> dict:
        out = {"fps": self.fps, "workers": self.workers}
        for name in _SECTIONS:
            section = dataclasses.asdict(getattr(self, name))
            out[name] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in section.items()}
        return out


def _merge_into(tree: dict, extra: Mapping, source: str) -> None:
    for key, value in extra.items():
        if key in _SECTIONS:
            if not isinstance(value, Mapping):
                raise ConfigError(f"{source}: section {key!r} must be a mapping")
            valid = {f.name for f in fields(_SECTIONS[key])}
            for sub, sub_value in value.items():
                if sub not in valid:
                    raise ConfigError(f"{source}: unknown key {key}.{sub}")
                tree[key][sub] = sub_value
        elif key in _TOP_LEVEL:
            tree[key] = value
        else:
            raise ConfigError(f"{source}: unknown config key {key!r}")


def _env_overrides(env: Mapping[str, str]) -> dict:
    tree: dict = {}
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().split("__")
        try:
            value = yaml.safe_load(env[name])
        except yaml.YAMLError as exc:
            raise ConfigError(f"env {name}: cannot parse value: {exc}") from exc
        if len(path) == 1:
            tree[path[0]] = value
        elif len(path) == 2:
            tree.setdefault(path[0], {})[path[1]] = value
        else:
            raise ConfigError(f"env {name}: too many path segments")
    return tree


def load_config(path: Optional[str] = None, env: Optional[Mapping[str, str]] = None,
                overrides: Optional[Mapping] = None) -> PipelineConfig:
    tree: dict = {name: {} for name in _SECTIONS}
    tree.update({k: None for k in _TOP_LEVEL})

    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise MissingFile(str(path))
        with open(path) as f:
            try:
                doc = yaml.safe_load(f) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{path}: cannot parse config: {exc}") from exc
        if not isinstance(doc, Mapping):
            raise ConfigError(f"{path}: config must be a mapping")
        _merge_into(tree, doc, str(path))

    env = os.environ if env is None else env
    _merge_into(tree, _env_overrides(env), "environment")
    if overrides:
        _merge_into(tree, overrides, "flags")

    kwargs = {}
    for key, cast in _TOP_LEVEL.items():
        if tree[key] is not None:
            try:
                kwargs[key] = cast(tree[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    for name, cls in _SECTIONS.items():
        try:
            kwargs[name] = cls(**tree[name])
        except TypeError as exc:
            raise ConfigError(f"config section {name!r}: {exc}") from exc
    return PipelineConfig(**kwargs)
