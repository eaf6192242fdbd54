"""Scenario configuration and its JSON form."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

from .transforms import DimSpec

__all__ = ["ConfigError", "ScenarioConfig", "parse_config", "serialize_config"]


class ConfigError(ValueError):
    """Malformed or constraint-violating scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Passive-radar scenario. Defaults give the two-antenna, P=2 experiment.

    The cycle period is ``P = sps``. SNRs are per-antenna and in dB.
    """

    L: int = 2
    rho: int = 2
    sps: int = 2
    N: int = 32
    M: int = 16
    snr_s_db: float = -10.0
    snr_r_db: float = 0.0
    channel_span_symbols: int = 10
    ma_order: int = 20
    spatial_corr: float = 0.5
    rc_rolloff: float = 1.0
    rc_span_symbols: int = 8
    seed: int = 0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.type == "int":
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{f.name}: expected an integer, got {value!r}")
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{f.name}: expected a number, got {value!r}")
            elif not math.isfinite(value):
                raise ConfigError(f"{f.name}: must be finite, got {value!r}")
            else:
                object.__setattr__(self, f.name, float(value))
        for name in ("L", "rho", "sps", "N", "M", "channel_span_symbols", "rc_span_symbols"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be >= 1, got {getattr(self, name)}")
        if self.ma_order < 0:
            raise ConfigError(f"ma_order: must be >= 0, got {self.ma_order}")
        if self.seed < 0:
            raise ConfigError(f"seed: must be >= 0, got {self.seed}")
        if self.rho < self.L:
            raise ConfigError(
                f"rho: transmit antennas must satisfy rho >= L (rho={self.rho}, L={self.L})"
            )
        need = 2 * self.L * self.sps
        if self.M < need:
            raise ConfigError(f"M: must satisfy M >= 2*L*P = {need}, got {self.M}")
        if not 0.0 <= self.spatial_corr < 1.0:
            raise ConfigError(f"spatial_corr: must lie in [0, 1), got {self.spatial_corr}")
        if not 0.0 <= self.rc_rolloff <= 1.0:
            raise ConfigError(f"rc_rolloff: must lie in [0, 1], got {self.rc_rolloff}")

    @property
    def P(self) -> int:
        return self.sps

    @property
    def dims(self) -> DimSpec:
        return DimSpec(L=self.L, P=self.sps, N=self.N, M=self.M)

    @property
    def n_samples(self) -> int:
        """Samples per channel in one observation, ``M*N*P``."""
        return self.M * self.N * self.sps

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def parse_config(text: str) -> ScenarioConfig:
    """Parse a JSON scenario document. Missing keys take their defaults.

    Raises
    ------
    ConfigError
        On malformed JSON (with line and column), unknown keys, wrong types
        or violated constraints (the field is named in the message).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("top-level JSON value must be an object")
    unknown = sorted(set(doc) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return ScenarioConfig(**doc)


def serialize_config(cfg: ScenarioConfig) -> str:
    return json.dumps(dataclasses.asdict(cfg), indent=2)
