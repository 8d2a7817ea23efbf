"""Configuration dataclasses and YAML loading for the gait engine.

Every physical and tuning constant lives here and in the shipped
``configs/default.yaml``; nothing is hardcoded elsewhere.  The nested
dataclasses mirror the YAML sections one to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, is_dataclass, replace
from typing import Any

import yaml


class ConfigError(Exception):
    """Raised for invalid, missing, or inconsistent configuration."""


@dataclass(frozen=True)
class PendulumParams:
    """Linear inverted pendulum constants.

    ``c`` is the pendulum constant in 1/s.  It defaults to sqrt(g/h) but is
    stored explicitly because in practice it is fitted to an individual
    walker rather than recomputed from geometry.
    """

    c: float = 3.0
    g: float = 9.81
    h: float | None = None  # nominal CoM height, m; g/c^2 when omitted

    def __post_init__(self) -> None:
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ConfigError(f"pendulum constant must be positive, got {self.c}")
        if not (self.g > 0.0):
            raise ConfigError(f"gravity must be positive, got {self.g}")
        if self.h is None:
            object.__setattr__(self, "h", self.g / (self.c * self.c))
        elif not (self.h > 0.0):
            raise ConfigError(f"CoM height must be positive, got {self.h}")

    @classmethod
    def from_height(cls, g: float = 9.81, h: float = 1.09) -> "PendulumParams":
        """Derive the pendulum constant exactly from sqrt(g/h)."""
        return cls(c=math.sqrt(g / h), g=g, h=h)


@dataclass(frozen=True)
class RefConfig:
    """Reference-trajectory shape parameters and control bounds.

    alpha   lateral apex distance, m
    delta   minimal lateral support-exchange distance, m
    omega   maximal lateral support-exchange distance, m
    sigma   sagittal CoM displacement at full forward speed, m
    cx_max  sagittal displacement limit that forces an early step, m
    z*      ZMP offset bounds (roughly the foot outline), m
    t_tipover  constant step time commanded while tipping over, s
    """

    alpha: float = 0.04
    delta: float = 0.06
    omega: float = 0.10
    sigma: float = 0.10
    cx_max: float = 0.15
    zx_min: float = -0.05
    zx_max: float = 0.05
    zy_min: float = -0.03
    zy_max: float = 0.03
    t_tipover: float = 2.0

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < self.delta <= self.omega):
            raise ConfigError(
                "need 0 < alpha < delta <= omega, got "
                f"alpha={self.alpha} delta={self.delta} omega={self.omega}"
            )
        if self.sigma <= 0.0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.cx_max <= 0.0:
            raise ConfigError(f"cx_max must be positive, got {self.cx_max}")
        if self.zx_min > self.zx_max or self.zy_min > self.zy_max:
            raise ConfigError("ZMP bounds are inverted")
        if self.t_tipover <= 0.0:
            raise ConfigError("t_tipover must be positive")


@dataclass(frozen=True)
class CpgConfig:
    """Stepping-pattern gains and phase timing.

    k1/k2 are ground-push and step-lift heights (leg extension units), k3/k4
    intensify them with the step amplitude.  k5..k10 are the leg swing gains:
    roll oscillation, roll spread per lateral and per yaw amplitude, pitch
    swing, yaw swing, and yaw offset.  k_mu0/k_mu1 delay the swing start and
    rush the swing end inside the swing half-phase.
    """

    k1: float = 0.01
    k2: float = 0.10
    k3: float = 0.05
    k4: float = 0.15
    k5: float = 0.25
    k6: float = 0.20
    k7: float = 0.15
    k8: float = 0.30
    k9: float = 0.30
    k10: float = 0.10
    k_mu0: float = 0.35
    k_mu1: float = 2.80
    rho: float = 0.01  # control loop period, s
    t_min: float = 0.05  # minimum step duration, s
    neutral_eta: float = 0.05
    arm_swing_gain: float = 0.20
    joint_limit: float = 3.20  # |joint angle| bound used by safety checks, rad

    def __post_init__(self) -> None:
        if not (-math.pi < self.k_mu0 < self.k_mu1 < math.pi):
            raise ConfigError(
                f"need -pi < k_mu0 < k_mu1 < pi, got {self.k_mu0}, {self.k_mu1}"
            )
        if self.rho <= 0.0:
            raise ConfigError(f"loop period must be positive, got {self.rho}")
        if self.t_min < self.rho:
            raise ConfigError("t_min must be at least one loop period")
        if not (0.0 < self.neutral_eta < 1.0):
            raise ConfigError(f"neutral_eta must be in (0, 1), got {self.neutral_eta}")


@dataclass(frozen=True)
class FilterConfig:
    """Predictive-filter tuning.

    epsilon        suppression window after a support exchange, s
    distance_gain  gain on the measurement/model distance in the blend factor
    latency        control loop latency compensated by prediction, s
    """

    epsilon: float = 0.07
    distance_gain: float = 0.5
    latency: float = 0.054

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon must be positive")
        if self.distance_gain < 0.0 or self.latency < 0.0:
            raise ConfigError("distance_gain and latency must be non-negative")


@dataclass(frozen=True)
class KinematicModel:
    """Link lengths of a generic humanoid chain, m.

    Only the ratios matter for the pose reconstruction; the defaults are a
    humanoid-proportioned set.
    """

    trunk: float = 0.40
    thigh: float = 0.20
    shank: float = 0.20
    foot: float = 0.04  # ankle height above the sole
    hip_spacing: float = 0.12

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) <= 0.0:
                raise ConfigError(f"link length {f.name} must be positive")

    @property
    def leg_length(self) -> float:
        return self.thigh + self.shank + self.foot


@dataclass(frozen=True)
class EstimationConfig:
    """State-estimation tuning."""

    exchange_clearance: float = 0.005  # vertical hysteresis before re-exchange, m

    def __post_init__(self) -> None:
        if self.exchange_clearance <= 0.0:
            raise ConfigError("exchange_clearance must be positive")


@dataclass(frozen=True)
class SimConfig:
    """Point-mass plant tuning."""

    fall_radius_x: float = 0.35  # sagittal CoM escape radius, m
    fall_radius_y: float = 0.35  # lateral CoM escape radius, m
    yaw_step_gain: float = 0.30  # frame yaw increment per unit yaw amplitude, rad

    def __post_init__(self) -> None:
        if self.fall_radius_x <= 0.0 or self.fall_radius_y <= 0.0:
            raise ConfigError("fall radii must be positive")


@dataclass(frozen=True)
class GaitConfig:
    """Aggregates every constant of the gait engine."""

    pendulum: PendulumParams = field(default_factory=PendulumParams)
    reference: RefConfig = field(default_factory=RefConfig)
    cpg: CpgConfig = field(default_factory=CpgConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    kinematics: KinematicModel = field(default_factory=KinematicModel)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    simulation: SimConfig = field(default_factory=SimConfig)

    @property
    def rho(self) -> float:
        """Shared control loop period, s."""
        return self.cpg.rho

    def with_latency(self, latency: float) -> "GaitConfig":
        return replace(self, filter=replace(self.filter, latency=latency))


_SECTIONS = {
    "pendulum": PendulumParams,
    "reference": RefConfig,
    "cpg": CpgConfig,
    "filter": FilterConfig,
    "kinematics": KinematicModel,
    "estimation": EstimationConfig,
    "simulation": SimConfig,
}


def _build_section(cls: type, data: dict[str, Any], path: str) -> Any:
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{path}': {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad section '{path}': {exc}") from exc


def config_from_dict(data: dict[str, Any]) -> GaitConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a mapping")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    parts = {}
    for name, cls in _SECTIONS.items():
        section = data.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"section '{name}' must be a mapping")
        parts[name] = _build_section(cls, section, name)
    return GaitConfig(**parts)


def config_to_dict(cfg: GaitConfig) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for name in _SECTIONS:
        section = getattr(cfg, name)
        assert is_dataclass(section)
        out[name] = {f.name: getattr(section, f.name) for f in fields(section)}
    return out


def load_config(path: str) -> GaitConfig:
    """Load a gait configuration from a YAML file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in '{path}': {exc}") from exc
    if data is None:
        raise ConfigError(f"config '{path}' is empty")
    return config_from_dict(data)


def save_config(cfg: GaitConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
