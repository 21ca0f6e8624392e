"""Run configuration: parsing, canonical form, and conversion to a scenario."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .codec import decode_matrix, decode_vector, encode_matrix, encode_vector
from .linalg import as_state
from .reduction import ReductionFamily
from .scenarios import DEFAULT_PSI, Scenario, build_scenario

DEFAULT_TOLERANCES = {
    "completeness": 1e-9,
    "unitarity": 1e-9,
    "extraction": 1e-12,
    "vacuum": 1e-12,
    "tv": 1e-9,
    "fidelity": 1e-9,
    "nondemolition": 1e-9,
    "shift_reversal": 1e-9,
    "algebra": 1e-9,
    "reflection": 1e-9,
    "z_score": 4.0,
}
FORMATS = ("json", "csv")
_TOP_KEYS = {
    "scenario", "params", "family", "E", "psi", "steps", "horizon",
    "samples", "seed", "tolerances", "output", "format",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: str | None = None
    params: dict = field(default_factory=dict)
    family: dict | None = None  # {"kraus": [[M, ...], ...], "weights": [...]}, matrices decoded
    E: np.ndarray | None = None
    psi: np.ndarray | None = None
    steps: int | None = None
    horizon: int | None = None
    samples: int = 10_000
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "json"

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def all_tolerances(self) -> dict:
        return {k: self.tol(k) for k in sorted(DEFAULT_TOLERANCES)}

    def canonical(self) -> dict:
        """JSON-ready canonical form; parsing it back reproduces the same form."""
        out: dict[str, Any] = {"samples": self.samples, "seed": self.seed, "format": self.format}
        if self.scenario is not None:
            out["scenario"] = self.scenario
            out["params"] = {k: _encode_param(v) for k, v in sorted(self.params.items())}
        if self.family is not None:
            out["family"] = {
                "kraus": [[encode_matrix(op) for op in ops] for ops in self.family["kraus"]],
                "weights": [float(w) for w in self.family["weights"]],
            }
        if self.E is not None:
            out["E"] = encode_matrix(self.E)
        if self.psi is not None:
            out["psi"] = encode_vector(self.psi)
        for key in ("steps", "horizon", "output"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.tolerances:
            out["tolerances"] = {k: float(v) for k, v in sorted(self.tolerances.items())}
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "scenario" in kw:
            kw.setdefault("family", None)
        if "tol" in kw:
            tol = kw.pop("tol")
            kw["tolerances"] = {k: tol for k in DEFAULT_TOLERANCES if k != "z_score"}
        cfg = replace(self, **kw)
        _check(cfg)
        return cfg

    def build(self) -> Scenario:
        """Scenario for this config: a named one, or one made from explicit matrices."""
        if self.scenario is not None:
            params = dict(self.params)
            for key in ("steps", "horizon"):
                if getattr(self, key) is not None:
                    params[key] = getattr(self, key)
            if self.psi is not None:
                params["psi"] = self.psi
            return build_scenario(self.scenario, params)
        fam = ReductionFamily(tuple(tuple(ops) for ops in self.family["kraus"]), tuple(self.family["weights"]))
        psi = DEFAULT_PSI if self.psi is None else self.psi
        if psi.shape[0] != fam.system_dim:
            raise ConfigError(f"psi has dim {psi.shape[0]}, family acts on dim {fam.system_dim}")
        psi = as_state(psi, normalized=True)
        return Scenario("explicit", fam, psi, self.E, self.horizon or 3, self.steps or self.horizon or 3)


def _encode_param(v):
    if isinstance(v, np.ndarray):
        return encode_matrix(v) if v.ndim == 2 else encode_vector(v)
    return v


def _decode_param(key: str, v):
    if key in ("X", "E", "B0"):
        return decode_matrix(v)
    if key in ("phi", "psi"):
        return decode_vector(v)
    return v


def _int(data, key, default, minimum):
    value = data.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {value!r}")
    return value


def _check(cfg: RunConfig) -> None:
    if (cfg.scenario is None) == (cfg.family is None):
        raise ConfigError("give exactly one of 'scenario' or 'family'")
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {cfg.format!r}")
    for key in ("steps", "horizon"):
        v = getattr(cfg, key)
        if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 1):
            raise ConfigError(f"{key} must be a positive integer")
    if isinstance(cfg.samples, bool) or not isinstance(cfg.samples, int) or cfg.samples < 0:
        raise ConfigError("samples must be a non-negative integer")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    unknown = set(cfg.tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ConfigError(f"unknown tolerances: {sorted(unknown)}")


def parse_config(data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from decoded JSON, raising :class:`ConfigError` on bad input."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        family = None
        if "family" in data:
            fam = data["family"]
            if not isinstance(fam, dict):
                raise ConfigError("family must be an object")
            if "operators" in fam:
                kraus = [[decode_matrix(op)] for op in fam["operators"]]
            elif "kraus" in fam:
                kraus = [[decode_matrix(op) for op in ops] for ops in fam["kraus"]]
            else:
                raise ConfigError("family needs 'operators' or 'kraus'")
            weights = [float(w) for w in fam.get("weights", [1.0] * len(kraus))]
            family = {"kraus": kraus, "weights": weights}
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params must be an object")
        tolerances = data.get("tolerances", {})
        if not isinstance(tolerances, dict):
            raise ConfigError("tolerances must be an object")
        cfg = RunConfig(
            scenario=data.get("scenario"),
            params={k: _decode_param(k, v) for k, v in params.items()},
            family=family,
            E=decode_matrix(data["E"]) if "E" in data else None,
            psi=decode_vector(data["psi"]) if "psi" in data else None,
            steps=_int(data, "steps", None, 1),
            horizon=_int(data, "horizon", None, 1),
            samples=_int(data, "samples", 10_000, 0),
            seed=_int(data, "seed", 0, 0),
            tolerances={k: float(v) for k, v in tolerances.items()},
            output=data.get("output"),
            format=data.get("format", "json"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    _check(cfg)
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)
