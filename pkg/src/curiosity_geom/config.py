"""Experiment configuration: defaults, TOML files and command-line overrides."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

MODES = ("occupancy", "optima", "sweep", "natgrad", "dpi", "knn", "verify")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "verify"
    seed: int = 0
    mdp: str | None = None
    """Path to an MDP JSON file, or ``"swap"`` for the bundled two-state fixture."""
    reward: tuple | None = None
    alpha: tuple = (-1.0, -0.5, 0.0, 0.5)
    beta: tuple = (0.1, 0.3, 1.0, 3.0, 10.0)
    horizon: int = 0
    tol_optimum: float = 1e-6
    tol_geodesic: float = 1e-5
    tol_gradient: float = 1e-5
    episodes: int = 20_000
    trials: int = 100
    iterations: int = 2000
    out: str = "results"
    only: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {', '.join(MODES)}, got {self.mode!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an integer in [0, 2^64)")
        for name in ("alpha", "beta"):
            vals = getattr(self, name)
            if not vals:
                raise ConfigError(name, "must be a non-empty list")
        if any(a == 1.0 for a in self.alpha):
            raise ConfigError("alpha", "alpha-information diverges at alpha=1")
        if any(not b >= 0 for b in self.beta):
            raise ConfigError("beta", "values must be >= 0")
        if self.mode == "sweep":
            b = list(self.beta)
            if len(b) < 3 or any(x <= 0 for x in b) or sorted(set(b)) != b:
                raise ConfigError("beta", "sweep needs at least 3 strictly increasing positive values")
        if self.reward is not None and len(self.reward) < 2:
            raise ConfigError("reward", "needs at least 2 states")
        if self.mode in ("optima", "sweep") and self.reward is None and self.mdp is None:
            raise ConfigError("reward", f"mode {self.mode} needs a reward vector or an mdp")
        if self.mode == "occupancy" and self.mdp is None:
            raise ConfigError("mdp", "mode occupancy needs an mdp")
        if self.horizon < 0:
            raise ConfigError("horizon", "must be >= 0")
        for name in ("tol_optimum", "tol_geodesic", "tol_gradient"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        for name in ("episodes", "trials", "iterations"):
            if getattr(self, name) < 2:
                raise ConfigError(name, "must be >= 2")
        return self


_FIELDS = {f.name for f in fields(ExperimentConfig)}
_TUPLE_FIELDS = {"reward", "alpha", "beta"}
_INT_FIELDS = {"seed", "horizon", "episodes", "trials", "iterations"}
_FLOAT_FIELDS = {"tol_optimum", "tol_geodesic", "tol_gradient"}


def _coerce(name: str, value):
    try:
        if name in _TUPLE_FIELDS:
            if value is None:
                return None
            if isinstance(value, (int, float)):
                value = [value]
            return tuple(float(v) for v in value)
        if name in _INT_FIELDS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if name in _FLOAT_FIELDS:
            return float(value)
        return None if value is None else str(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"invalid value {value!r}") from None


def config_from_mapping(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    values = {k: _coerce(k, v) for k, v in data.items()}
    return replace(base or ExperimentConfig(), **values)


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then the TOML file (if any), then non-None ``overrides``; validated."""
    cfg = ExperimentConfig()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"cannot parse {path}: {exc}") from None
        cfg = config_from_mapping(data, cfg)
        if cfg.mdp and cfg.mdp != "swap" and not Path(cfg.mdp).is_absolute():
            cfg = replace(cfg, mdp=str(Path(path).parent / cfg.mdp))
    if overrides:
        cfg = config_from_mapping({k: v for k, v in overrides.items() if v is not None}, cfg)
    return cfg.validate()
