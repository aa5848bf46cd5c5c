"""Experiment configuration: a strict JSON document.

Powers may be given linearly (``"q": 50.1``) or in dB (``"q_db": 17``), never
both.  Unknown keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from hybridnet.errors import HybridNetError, InvalidParameterError
from hybridnet.propagation import DeploymentParams, SystemParams
from hybridnet.spatial import DEFAULT_TRUNCATION

EXPERIMENTS = ("outage", "mu-curve", "mpt-power", "power-outage", "feasibility",
               "fig3", "fig4", "fig5", "fig6")

# Values used when a config leaves them out.  17 dB beacon power and 10 dB
# received-signal threshold are the evaluation settings.
DEFAULT_Q_DB = 17.0
DEFAULT_P_B_DB = 10.0

_SYSTEM_KEYS = {"alpha", "beta", "nu", "theta", "sigma2", "omega", "z_m", "z_s", "K",
                "epsilon", "eta", "delta", "p_b", "p_t"}
_SYSTEM_DB_KEYS = {"theta", "sigma2", "z_m", "z_s", "p_b", "p_t"}
_DEPLOYMENT_KEYS = {"p", "q", "lambda_b", "lambda_p"}
_DEPLOYMENT_DB_KEYS = {"p", "q"}
_SWEEP_KEYS = {"lambda_b", "lambda_p", "mu"}
_TOP_KEYS = {"experiment", "seed", "trials", "output", "truncation_factor", "system",
             "deployment", "sweep", "mode", "storage", "noise", "threshold", "threshold_db",
             "power_trials", "lambda_p_max", "region"}


class ConfigError(HybridNetError):
    """The configuration file cannot be read or parsed."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _take_powers(section: dict, keys: set, db_keys: set, where: str) -> dict:
    out = {}
    for k, v in section.items():
        base = k[:-3] if k.endswith("_db") else k
        is_db = k.endswith("_db")
        if base not in keys or (is_db and base not in db_keys):
            raise InvalidParameterError(f"unknown key {where}.{k}")
        if base in out:
            raise InvalidParameterError(f"{where}.{base} given both linearly and in dB")
        if v is None:
            out[base] = None
            continue
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise InvalidParameterError(f"{where}.{k} must be a number")
        out[base] = db_to_linear(v) if is_db else v
    return out


def _number(doc: dict, key: str) -> float:
    v = doc[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise InvalidParameterError(f"{key} must be a number")
    return float(v)


def _grid(spec: Any, name: str) -> Optional[list]:
    """A sweep is an explicit list or ``{"start", "stop", "num", "log"}``."""
    if spec is None:
        return None
    if isinstance(spec, list):
        if not spec or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in spec):
            raise InvalidParameterError(f"sweep.{name} must be a nonempty list of numbers")
        return [float(x) for x in spec]
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "num", "log"}
        if extra:
            raise InvalidParameterError(f"unknown key sweep.{name}.{sorted(extra)[0]}")
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except (KeyError, TypeError, ValueError):
            raise InvalidParameterError(f"sweep.{name} needs numeric start, stop, num") from None
        if num < 1:
            raise InvalidParameterError(f"sweep.{name}.num must be >= 1")
        if spec.get("log", False):
            if start <= 0 or stop <= 0:
                raise InvalidParameterError(f"log sweep.{name} needs positive bounds")
            return [float(x) for x in np.geomspace(start, stop, num)]
        return [float(x) for x in np.linspace(start, stop, num)]
    raise InvalidParameterError(f"sweep.{name} must be a list or a range object")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Optional[str] = None
    seed: Optional[int] = None
    trials: Optional[int] = None
    output: Optional[str] = None
    truncation_factor: float = DEFAULT_TRUNCATION
    system: SystemParams = field(default_factory=lambda: SystemParams(p_b=db_to_linear(DEFAULT_P_B_DB)))
    deployment: DeploymentParams = field(default_factory=lambda: DeploymentParams(q=db_to_linear(DEFAULT_Q_DB)))
    sweep: dict = field(default_factory=dict)
    mode: str = "isotropic"
    storage: str = "large"
    noise: str = "nonzero"
    threshold: Optional[float] = None
    power_trials: Optional[int] = None
    lambda_p_max: Optional[float] = None
    region: str = "cellular"

    def with_overrides(self, **kw) -> ExperimentConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def validate(self):
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise InvalidParameterError(f"experiment must be one of {EXPERIMENTS}")
        if self.seed is None:
            raise InvalidParameterError("a seed is required (config 'seed' or --seed)")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")
        for name in ("trials", "power_trials"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or v < 1):
                raise InvalidParameterError(f"{name} must be a positive integer")
        if self.mode not in ("isotropic", "directed"):
            raise InvalidParameterError("mode must be isotropic or directed")
        if self.storage not in ("large", "small"):
            raise InvalidParameterError("storage must be large or small")
        if self.noise not in ("nonzero", "interference_limited"):
            raise InvalidParameterError("noise must be nonzero or interference_limited")
        if self.region not in ("cellular", "hybrid"):
            raise InvalidParameterError("region must be cellular or hybrid")
        if self.truncation_factor < 10:
            raise InvalidParameterError("truncation_factor must be >= 10")
        if self.threshold is not None and self.threshold < 0:
            raise InvalidParameterError("threshold must be nonnegative")
        if self.lambda_p_max is not None and not self.lambda_p_max > 0:
            raise InvalidParameterError("lambda_p_max must be positive")
        for name, grid in self.sweep.items():
            if name in ("lambda_b", "lambda_p") and any(not (x > 0) for x in grid):
                raise InvalidParameterError(f"sweep.{name} values must be positive")
            if name == "mu" and any(x < 0 for x in grid):
                raise InvalidParameterError("sweep.mu values must be nonnegative")
        return self

    def to_json(self) -> dict:
        """Fully resolved, linear-unit echo of the configuration."""
        d = asdict(self)
        return json.loads(json.dumps(d, default=float))


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise InvalidParameterError("config must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise InvalidParameterError(f"unknown key {sorted(extra)[0]}")
    doc = {k: v for k, v in doc.items() if v is not None}
    kw: dict[str, Any] = {}
    for k in ("experiment", "seed", "trials", "output", "mode", "storage", "noise",
              "power_trials", "region"):
        if k in doc:
            kw[k] = doc[k]
    for k in ("truncation_factor", "lambda_p_max", "threshold"):
        if k in doc:
            kw[k] = _number(doc, k)
    if "threshold_db" in doc:
        if "threshold" in doc:
            raise InvalidParameterError("threshold given both linearly and in dB")
        kw["threshold"] = db_to_linear(_number(doc, "threshold_db"))

    sys_in = _take_powers(doc.get("system", {}), _SYSTEM_KEYS, _SYSTEM_DB_KEYS, "system")
    sys_in.setdefault("p_b", db_to_linear(DEFAULT_P_B_DB))
    dep_in = _take_powers(doc.get("deployment", {}), _DEPLOYMENT_KEYS, _DEPLOYMENT_DB_KEYS, "deployment")
    dep_in.setdefault("q", db_to_linear(DEFAULT_Q_DB))
    try:
        kw["system"] = SystemParams(**sys_in)
        kw["deployment"] = DeploymentParams(**dep_in)
    except TypeError as exc:
        raise InvalidParameterError(str(exc)) from None

    sweep_in = doc.get("sweep", {})
    if not isinstance(sweep_in, dict):
        raise InvalidParameterError("sweep must be an object")
    extra = set(sweep_in) - _SWEEP_KEYS
    if extra:
        raise InvalidParameterError(f"unknown key sweep.{sorted(extra)[0]}")
    kw["sweep"] = {k: _grid(v, k) for k, v in sweep_in.items() if v is not None}
    for k, v in kw.items():
        if k in ("seed", "trials", "power_trials") and isinstance(v, bool):
            raise InvalidParameterError(f"{k} must be an integer")
    # validated once CLI overrides are merged in
    return ExperimentConfig(**kw)


def load_config(path: Optional[str]) -> ExperimentConfig:
    """Read a config file; ``None`` gives the all-defaults config."""
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc)


def _reject_constant(name):
    raise ValueError(f"non-standard JSON constant {name}")


def finite_or_none(x: float) -> Optional[float]:
    return x if math.isfinite(x) else None
