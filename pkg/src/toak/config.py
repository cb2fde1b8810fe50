"""Experiment configuration: a flat key = value manifest, CLI overrides, and
a stable hash that stamps every artifact a run produces.

Schema (all keys optional in the file; commands validate what they need):

    source            path to the source edge list
    target            path to the target edge list
    anchors           path to the anchor CSV "source,target"
    source_attrs      optional attribute file for the source graph
    target_attrs      optional attribute file for the target graph
    attacks           comma list from {toak, random, deg, pr, fpta, none}
    budget_fraction   fraction of target edges to remove, in (0, 1]
    k                 ego-network hop count
    lam               prior-knowledge boost coefficient
    walks_per_node    random walks started per node
    walk_length       steps per walk
    alpha             prior weight of the closed-form matcher
    mode              exact | accelerated
    seeds             comma-separated integer list
    prior             anchors | degree | none
    matchers          comma list from {kernel, propagation}
    train_ratio       anchor fraction used as training prior
    vgae_hidden1, vgae_hidden2, vgae_lr, vgae_epochs
    damping, prop_iters
    outdir            output directory (not part of the hash)
"""

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

_LIST_KEYS = {"seeds", "matchers", "attacks"}


@dataclass
class ExperimentConfig:
    source: str = ""
    target: str = ""
    anchors: str = ""
    source_attrs: str = ""
    target_attrs: str = ""
    attacks: tuple = ("toak", "random")
    budget_fraction: float = 0.10
    k: int = 2
    lam: float = 2.0
    walks_per_node: int = 1000
    walk_length: int = 5
    alpha: float = 1.0
    mode: str = "accelerated"
    seeds: tuple = (0, 1, 2, 3, 4)
    prior: str = "anchors"
    matchers: tuple = ("kernel", "propagation")
    train_ratio: float = 0.2
    vgae_hidden1: int = 32
    vgae_hidden2: int = 16
    vgae_lr: float = 0.001
    vgae_epochs: int = 1000
    damping: float = 0.5
    prop_iters: int = 20
    outdir: str = "out"

    def validate(self, require_paths=()):
        if not 0.0 < self.budget_fraction <= 1.0:
            raise ConfigError(f"budget_fraction {self.budget_fraction} outside (0, 1]")
        if len(self.seeds) == 0:
            raise ConfigError("seeds list is empty")
        if self.mode not in ("exact", "accelerated"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if len(self.attacks) == 0:
            raise ConfigError("attacks list is empty")
        for a in self.attacks:
            if a not in ("toak", "random", "deg", "pr", "fpta", "none"):
                raise ConfigError(f"unknown attack {a!r}")
        if self.prior not in ("anchors", "degree", "none"):
            raise ConfigError(f"unknown prior mode {self.prior!r}")
        for m in self.matchers:
            if m not in ("kernel", "propagation"):
                raise ConfigError(f"unknown matcher {m!r}")
        if not 0.0 <= self.train_ratio < 1.0:
            raise ConfigError("train_ratio must lie in [0, 1)")
        for key in require_paths:
            value = getattr(self, key)
            if not value:
                raise ConfigError(f"config key {key!r} is required for this command")
            if not Path(value).exists():
                raise ConfigError(f"{key} path does not exist: {value}")
        return self

    def config_hash(self):
        """Stable digest over every result-affecting field (outdir excluded)."""
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            if f.name == "outdir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{f.name}={value}")
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]

    def to_dict(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def _coerce(name, raw, target_type):
    try:
        if name in _LIST_KEYS:
            parts = [p.strip() for p in str(raw).split(",") if p.strip()]
            if name == "seeds":
                return tuple(int(p) for p in parts)
            return tuple(parts)
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse config value {name} = {raw!r}") from None


def parse_config_file(path):
    """Read a flat "key = value" manifest; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {body!r}")
            key, _, raw = body.partition("=")
            values[key.strip()] = raw.strip()
    return values


def build_config(file_path=None, overrides=None):
    """Config from defaults, then the manifest file, then CLI overrides."""
    cfg = ExperimentConfig()
    typed = {f.name: type(getattr(cfg, f.name)) for f in fields(cfg)}
    merged = {}
    if file_path:
        if not Path(file_path).exists():
            raise ConfigError(f"config file not found: {file_path}")
        merged.update(parse_config_file(file_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    for key, raw in merged.items():
        if key not in typed:
            raise ConfigError(f"unknown config key {key!r}")
        cfg = replace(cfg, **{key: _coerce(key, raw, typed[key])})
    return cfg
