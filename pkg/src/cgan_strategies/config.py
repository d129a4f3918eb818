"""Experiment configuration with the published protocol as defaults."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass

import yaml

from .strategies import ENSEMBLE_LEARNERS, TUNING_GRIDS

SCHEMA_VERSION = 1

CASE2_SCHEMES = (
    "naive", "one_split", "sliding", "hv_block", "block", "kfold",
    "stat_boot", "cgan_small", "cgan_medium", "cgan_large",
)
CASE1_RESAMPLERS = ("stat_boot", "cgan_small", "cgan_medium", "cgan_large")


class ConfigError(ValueError):
    pass


def normalize_name(name: str) -> str:
    """``hv-block`` -> ``hv_block``, ``k-fold`` -> ``kfold``, ``cgan-large`` -> ``cgan_large``."""
    n = name.strip().lower().replace("-", "_")
    return {"k_fold": "kfold", "onesplit": "one_split", "statboot": "stat_boot", "hvblock": "hv_block"}.get(n, n)


@dataclass
class CganSection:
    sizes: list = field(default_factory=lambda: ["small", "medium", "large"])
    p: int = 252
    noise_dim: int = 252
    epochs: int = 20000
    batch_size: int = 252
    snap: int = 200
    eval_samples: int = 50
    learning_rate: float = 0.01


@dataclass
class Case1Section:
    resamplers: list = field(default_factory=lambda: list(CASE1_RESAMPLERS))
    B: list = field(default_factory=lambda: [20, 100, 500])
    block_size: int = 20
    learners: dict = field(default_factory=lambda: copy.deepcopy(ENSEMBLE_LEARNERS))


@dataclass
class Case2Section:
    schemes: list = field(default_factory=lambda: list(CASE2_SCHEMES))
    sliding_window: int = 252
    sliding_stride: int = 252
    block_size: int = 252
    hv_gap: int = 10
    one_split_val: int = 1260
    kfold_k: int = 10
    bootstrap_B: int = 100
    bootstrap_block: int = 20
    cgan_B: int = 100
    cgan_val: int = 1260
    grids: dict = field(default_factory=lambda: copy.deepcopy(TUNING_GRIDS))


@dataclass
class ExperimentConfig:
    inputs: list = field(default_factory=list)
    output_dir: str = "results"
    holdout: int = 1260
    p: int = 252
    seed: int = 0
    workers: int = 1
    cgan: CganSection = field(default_factory=CganSection)
    case1: Case1Section = field(default_factory=Case1Section)
    case2: Case2Section = field(default_factory=Case2Section)

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        """Short digest of everything that determines the results (not paths or worker count)."""
        d = self.to_dict()
        for k in ("inputs", "output_dir", "workers"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def validate(self):
        if self.holdout < 1 or self.p < 1:
            raise ConfigError("holdout and p must be positive")
        for s in self.case2.schemes:
            if s not in CASE2_SCHEMES:
                raise ConfigError(f"unknown validation scheme {s!r}")
        for r in self.case1.resamplers:
            if r not in CASE1_RESAMPLERS:
                raise ConfigError(f"unknown resampler {r!r}")
        for kind in list(self.case1.learners) + list(self.case2.grids):
            if kind not in ("ridge", "reg_tree", "gbt", "mlp"):
                raise ConfigError(f"unknown learner kind {kind!r}")
        if any(b < 1 for b in self.case1.B):
            raise ConfigError("ensemble sizes must be positive")
        return self


def _merge(obj, data, path=""):
    names = {f.name: f for f in fields(obj)}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"unknown config key {path}{key}")
        current = getattr(obj, key)
        if is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}{key} must be a mapping")
            _merge(current, value, f"{path}{key}.")
        else:
            setattr(obj, key, value)


def from_dict(data) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if data:
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        _merge(cfg, data)
    if "case2" in (data or {}) and "schemes" in data["case2"]:
        cfg.case2.schemes = [normalize_name(s) for s in cfg.case2.schemes]
    if "case1" in (data or {}) and "resamplers" in data["case1"]:
        cfg.case1.resamplers = [normalize_name(s) for s in cfg.case1.resamplers]
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    """Read a YAML config; unspecified keys keep the protocol defaults."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_dict(data or {})


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
