"""Run configuration: defaults, validation and JSON/YAML loading."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

# default threshold per model (see the model-specific parameter spaces)
DEFAULT_T = {"sbm": 0.2, "ee": 0.5, "lsm": 1.0}

REQUIRED = ("model", "seed")


class ConfigError(ValueError):
    """Invalid or incomplete configuration; ``key`` names the offending field."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass
class RunConfig:
    """Knobs of one detection run.

    ``bf_cutoff`` is on the Bayes-factor scale (a split needs
    ``log_bf > log(bf_cutoff)``).  ``priors`` holds model hyperparameters:
    sbm ``gamma``; ee ``gamma`` and ``hyper = [a, b, c, d]``; lsm the fields
    of :class:`~bayesplit.lsm.LsmPriors` plus ``beta``.
    """

    model: str
    seed: int
    threshold_t: float | None = None
    bf_cutoff: float = 10.0
    sweeps: int = 2000
    burn_in: int = 500
    thinning: int = 1
    chains: int = 3
    min_size: int = 3
    max_depth: int = 12
    latent_d: int = 2
    priors: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in DEFAULT_T:
            raise ConfigError(f"model: expected one of {sorted(DEFAULT_T)}, got {self.model!r}", "model")
        if self.threshold_t is None:
            self.threshold_t = DEFAULT_T[self.model]
        for name in ("seed", "sweeps", "burn_in", "thinning", "chains", "min_size",
                     "max_depth", "latent_d"):
            val = getattr(self, name)
            if isinstance(val, bool) or not isinstance(val, (int, float)) or int(val) != val:
                raise ConfigError(f"{name}: expected an integer, got {val!r}", name)
            setattr(self, name, int(val))
        if not self.sweeps > self.burn_in >= 0:
            raise ConfigError("sweeps: need sweeps > burn_in >= 0", "sweeps")
        if self.thinning < 1:
            raise ConfigError("thinning: must be >= 1", "thinning")
        if self.chains < 1:
            raise ConfigError("chains: must be >= 1", "chains")
        if not (self.bf_cutoff > 0 and math.isfinite(self.bf_cutoff)):
            raise ConfigError("bf_cutoff: must be > 0", "bf_cutoff")
        if self.latent_d < 1:
            raise ConfigError("latent_d: must be >= 1", "latent_d")
        if not isinstance(self.priors, dict):
            raise ConfigError("priors: expected a mapping", "priors")
        self.threshold_t = float(self.threshold_t)

    @property
    def log_cutoff(self) -> float:
        return math.log(self.bf_cutoff)

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "RunConfig":
        doc = self.to_dict()
        doc.update(changes)
        return RunConfig(**doc)

    @classmethod
    def from_dict(cls, doc) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a mapping at the top level")
        for key in REQUIRED:
            if key not in doc:
                raise ConfigError(f"missing required config key '{key}'", key)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config key '{unknown[0]}'", unknown[0])
        return cls(**doc)


def load_config(path) -> RunConfig:
    """Read a JSON (``.json``) or YAML (anything else) configuration file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: cannot parse configuration ({exc})") from None
    return RunConfig.from_dict(doc)
