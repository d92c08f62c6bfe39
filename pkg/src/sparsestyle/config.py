"""Pipeline configuration: defaults, JSON/TOML loading, validation, hashing."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SparseStyleError

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    tomllib = None

__all__ = ["ConfigError", "PipelineConfig", "DEFAULTS"]


class ConfigError(SparseStyleError):
    exit_code = 2


DEFAULTS = {
    "joints": None,
    "fps": 30.0,
    "dtw": {"joint": "LeftFoot", "axis": "y", "band": None},
    "decompose": {
        "K": 10,
        "f": 0.1,
        "schedule": [0.1, 0.3, 0.6],
        "outer_iters": 20,
        "tol": 1e-8,
        "weight_constraint": None,
    },
    "synth": {"mode": "blend", "alpha": 0.5, "rank": None, "exchange_index": 1, "fix_limbs": True},
    "seed": 0,
    "io": {"inputs": [], "workdir": "work", "output": None},
}


def _merge(base, update, path=""):
    for key, value in update.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path + key!r} must be a table")
            _merge(base[key], value, path + key + ".")
        else:
            base[key] = value
    return base


@dataclass
class PipelineConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def load(cls, path=None, overrides=None) -> "PipelineConfig":
        data = copy.deepcopy(DEFAULTS)
        if path is not None:
            path = Path(path)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            try:
                if path.suffix == ".toml":
                    if tomllib is None:
                        raise ConfigError("TOML configs need Python 3.11+; use JSON")
                    loaded = tomllib.loads(text)
                else:
                    loaded = json.loads(text)
            except ValueError as exc:
                raise ConfigError(f"cannot parse config {path}: {exc}") from exc
            _merge(data, loaded)
        if overrides:
            _merge(data, overrides)
        cfg = cls(data)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.data[key]

    def validate(self) -> None:
        d = self.data
        if not d["fps"] or d["fps"] <= 0:
            raise ConfigError("fps must be positive")
        if d["joints"] is not None and (not isinstance(d["joints"], list) or len(d["joints"]) < 2):
            raise ConfigError("joints must be a list of at least two names")
        if d["dtw"]["axis"] not in ("x", "y", "z"):
            raise ConfigError("dtw.axis must be x, y or z")
        band = d["dtw"]["band"]
        if band is not None and band < 0:
            raise ConfigError("dtw.band must be non-negative")
        dec = d["decompose"]
        if not isinstance(dec["K"], int) or dec["K"] < 1:
            raise ConfigError("decompose.K must be a positive integer")
        for f in [dec["f"], *(dec["schedule"] or [])]:
            if not 0 < f <= 1:
                raise ConfigError(f"sparsity fractions must lie in (0, 1], got {f}")
        if not dec["schedule"]:
            raise ConfigError("decompose.schedule needs at least one entry")
        if dec["outer_iters"] < 0:
            raise ConfigError("decompose.outer_iters must be >= 0")
        if dec["weight_constraint"] not in (None, "box"):
            raise ConfigError("decompose.weight_constraint must be null or 'box'")
        syn = d["synth"]
        if syn["mode"] not in ("blend", "exchange"):
            raise ConfigError("synth.mode must be 'blend' or 'exchange'")
        if not 0 <= syn["alpha"] <= 1:
            raise ConfigError("synth.alpha must lie in [0, 1]")
        if syn["rank"] is not None and syn["rank"] < 1:
            raise ConfigError("synth.rank must be >= 1")
        if not 1 <= syn["exchange_index"] <= len(dec["schedule"]):
            raise ConfigError("synth.exchange_index must name a term of the schedule (1-based)")
        for p in d["io"]["inputs"]:
            if not Path(p).exists():
                raise ConfigError(f"input file {p} does not exist")

    def hash(self) -> str:
        """Digest of every setting that influences numbers (io paths excluded)."""
        numeric = {k: v for k, v in self.data.items() if k != "io"}
        blob = json.dumps(numeric, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]
