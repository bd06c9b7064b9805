"""Run configuration loaded from a YAML file.

Relative input paths are resolved against the directory of the configuration
file; ``cache_dir`` and ``output_dir`` against the working directory.
``KBRANK_CACHE_DIR`` overrides ``paths.cache_dir``. Every random component
takes an explicit seed from here.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .ensemble import EnsembleSpec, default_ensemble

CACHE_ENV = "KBRANK_CACHE_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class Paths:
    entities: str | None = None
    properties: str | None = None
    corpus: str | None = None
    gold: str | None = None
    search_counts: str | None = None
    recorded: str | None = None
    cache_dir: str = ".kbrank-cache"
    output_dir: str = "reports"


@dataclass
class IngestSettings:
    class_id: str | None = "Q5"
    drop_identifiers: bool = True
    min_usage: int = 0


@dataclass
class TfIdfSettings:
    prune_low: float = 0.2
    prune_high: float = 0.2


@dataclass
class RegressionSettings:
    learning_rate: float = 0.1
    l2: float = 1e-4
    max_epochs: int = 500
    tol: float = 1e-6
    seed: int = 0
    cap: int = 10_000
    holdout: int = 200
    min_side: int = 50


@dataclass
class LsiSettings:
    k: int = 50
    seed: int = 0
    oversample: int = 10
    power_iterations: int = 7


@dataclass
class LdaSettings:
    k: int = 20
    alpha: float = 0.01
    beta: float = 0.01
    seed: int = 0
    iterations: int = 1000
    inference_sweeps: int = 200


@dataclass
class RunConfig:
    paths: Paths = field(default_factory=Paths)
    ingest: IngestSettings = field(default_factory=IngestSettings)
    tfidf: TfIdfSettings = field(default_factory=TfIdfSettings)
    regression: RegressionSettings = field(default_factory=RegressionSettings)
    lsi: LsiSettings = field(default_factory=LsiSettings)
    lda: LdaSettings = field(default_factory=LdaSettings)
    methods: list[str] = field(default_factory=lambda: [
        "human_frequency", "occupation_frequency", "search_count", "property_suggester",
        "regression_plain", "regression_tfidf", "lda", "lsi", "best_ensemble"])
    ensembles: list[EnsembleSpec] = field(default_factory=lambda: [default_ensemble()])
    random_seed: int = 0
    correlation_min_agreement: float = 0.8
    base_dir: Path = field(default_factory=Path.cwd, compare=False)

    def path(self, name: str, required: bool = True) -> Path | None:
        value = getattr(self.paths, name)
        if value is None:
            if required:
                raise ConfigError(f"paths.{name} is not configured")
            return None
        if name == "cache_dir" and os.environ.get(CACHE_ENV):
            value = os.environ[CACHE_ENV]
        p = Path(value)
        if p.is_absolute():
            return p
        return (Path.cwd() if name in ("cache_dir", "output_dir") else self.base_dir) / p

    def input_path(self, name: str, required: bool = True) -> Path | None:
        p = self.path(name, required)
        if p is not None and not p.exists():
            raise FileNotFoundError(f"paths.{name}: {p} does not exist")
        return p

    def ensemble(self, name: str) -> EnsembleSpec | None:
        for spec in self.ensembles:
            if spec.name == name:
                return spec
        return None

    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            if f.name == "base_dir":
                continue
            v = getattr(self, f.name)
            if f.name == "ensembles":
                d[f.name] = [s.to_config() for s in v]
            elif dataclasses.is_dataclass(v):
                d[f.name] = dataclasses.asdict(v)
            else:
                d[f.name] = v
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_SECTIONS = {"paths": Paths, "ingest": IngestSettings, "tfidf": TfIdfSettings,
             "regression": RegressionSettings, "lsi": LsiSettings, "lda": LdaSettings}


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {', '.join(sorted(unknown))}")
    return cls(**data)


def config_from_dict(data: dict, base_dir: Path | None = None) -> RunConfig:
    data = dict(data or {})
    kwargs = {name: _section(cls, data.pop(name, None), name) for name, cls in _SECTIONS.items()}
    if "ensembles" in data:
        kwargs["ensembles"] = [EnsembleSpec.from_config(e) for e in data.pop("ensembles")]
    for key in ("methods", "random_seed", "correlation_min_agreement"):
        if key in data:
            kwargs[key] = data.pop(key)
    if data:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(data))}")
    cfg = RunConfig(**kwargs)
    cfg.base_dir = base_dir or Path.cwd()
    return cfg


def toy_config_path() -> Path:
    return Path(str(resources.files("kbrank.data").joinpath("toy", "config.yaml")))


def load_config(path) -> RunConfig:
    if str(path) == "toy":
        path = toy_config_path()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"configuration file {path} does not exist")
    data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, path.resolve().parent)
