"""Pipeline configuration: a YAML key/value file with CLI flag overrides.

Run outputs land in ``<output_dir>/<digest>`` where the digest hashes the
resolved configuration, so identical configs always map to the same
directory and reruns overwrite identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    manifest: str = ""
    backbones: list[str] = field(default_factory=lambda: ["mobilenetv3small"])
    task: str = "binary"
    augment: bool = False
    hyperband_r: int = 27
    hyperband_eta: int = 3
    k: int = 10
    seed: int = 0
    output_dir: str = "outputs"
    host: str = "127.0.0.1"
    port: int = 8000
    weights: dict[str, str] = field(default_factory=dict)

    def validate(self, require_manifest: bool = True) -> None:
        if require_manifest:
            if not self.manifest:
                raise ConfigError("manifest path is required")
            if not Path(self.manifest).is_file():
                raise ConfigError(f"manifest file not found: {self.manifest}")
        if self.task not in ("binary", "multiclass"):
            raise ConfigError(f"task must be binary or multiclass, got {self.task!r}")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if self.hyperband_r < 1 or self.hyperband_eta < 2:
            raise ConfigError("hyperband needs R >= 1 and eta >= 2")
        if not self.backbones:
            raise ConfigError("at least one backbone is required")
        for name, path in self.weights.items():
            if path not in (None, "", "imagenet") and not Path(path).is_file():
                raise ConfigError(f"weights file for {name} not found: {path}")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:12]

    def run_dir(self) -> Path:
        return Path(self.output_dir) / self.digest()


def load_config(path: str | Path | None) -> PipelineConfig:
    config = PipelineConfig()
    if path is None:
        return config
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    for key, value in data.items():
        setattr(config, key, value)
    return config


def apply_overrides(config: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Flags override file values; None values mean 'not given'."""
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    return config
