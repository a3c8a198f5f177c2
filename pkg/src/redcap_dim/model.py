"""Shared domain types: device capabilities, use-case requirements, carriers
and deployment presets, plus the use-case requirement checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Any, Optional


class Duplex(str, Enum):
    TDD = "TDD"
    FD_FDD = "FD-FDD"
    HD_FDD = "HD-FDD"


class FrequencyRange(str, Enum):
    FR1 = "FR1"
    FR2 = "FR2"


class Direction(str, Enum):
    DL = "DL"
    UL = "UL"


class ProfileKind(str, Enum):
    ReferenceNrFr1 = "ReferenceNrFr1"
    ReferenceNrFr2 = "ReferenceNrFr2"
    RedCapBaselineFr1 = "RedCapBaselineFr1"
    RedCapBaselineFr2 = "RedCapBaselineFr2"


class CapabilityError(ValueError):
    """A profile or carrier violates a device-capability limit."""


# Maximum transmission bandwidth configuration N_RB per (range, SCS kHz, MHz).
PRB_TABLE: dict[tuple[FrequencyRange, int], dict[float, int]] = {
    (FrequencyRange.FR1, 15): {5: 25, 10: 52, 15: 79, 20: 106, 25: 133, 30: 160,
                               35: 188, 40: 216, 45: 242, 50: 270},
    (FrequencyRange.FR1, 30): {5: 11, 10: 24, 15: 38, 20: 51, 25: 65, 30: 78,
                               35: 92, 40: 106, 45: 119, 50: 133, 60: 162,
                               70: 189, 80: 217, 90: 245, 100: 273},
    (FrequencyRange.FR1, 60): {10: 11, 15: 18, 20: 24, 25: 31, 30: 38, 35: 44,
                               40: 51, 45: 58, 50: 65, 60: 79, 70: 93, 80: 107,
                               90: 121, 100: 135},
    (FrequencyRange.FR2, 60): {50: 66, 100: 132, 200: 264},
    (FrequencyRange.FR2, 120): {50: 32, 100: 66, 200: 132, 400: 264},
}

REDCAP_MAX_BW_MHZ = {FrequencyRange.FR1: 20.0, FrequencyRange.FR2: 100.0}


def n_prb_for(frequency_range: FrequencyRange | str, scs_khz: int, bandwidth_mhz: float) -> int:
    fr = FrequencyRange(frequency_range)
    try:
        table = PRB_TABLE[(fr, int(scs_khz))]
    except KeyError:
        raise CapabilityError(f"no PRB table for {fr.value} at {scs_khz} kHz SCS") from None
    try:
        return table[bandwidth_mhz]
    except KeyError:
        raise CapabilityError(
            f"{bandwidth_mhz} MHz is not a defined channel bandwidth for "
            f"{fr.value} at {scs_khz} kHz SCS") from None


def max_prb_within(frequency_range: FrequencyRange | str, scs_khz: int, bandwidth_mhz: float) -> int:
    """Largest PRB count of any defined channel bandwidth not wider than ``bandwidth_mhz``."""
    table = PRB_TABLE[(FrequencyRange(frequency_range), int(scs_khz))]
    fitting = [n for bw, n in table.items() if bw <= bandwidth_mhz + 1e-9]
    if not fitting:
        raise CapabilityError(f"no channel bandwidth ≤ {bandwidth_mhz} MHz at {scs_khz} kHz")
    return max(fitting)


@dataclass(frozen=True)
class CapabilityProfile:
    max_bandwidth_mhz: float
    rx_branches: int
    dl_mimo_layers: int
    max_dl_modulation_order: int
    max_ul_modulation_order: int
    duplex_mode: Duplex
    frequency_range: FrequencyRange
    max_drbs: int
    sn_length_bits: int
    supports_anr: bool
    is_redcap: bool
    ul_mimo_layers: int = 1
    # display-only metadata, never computed
    name: str = "custom"
    panel_elements: Optional[int] = None
    cost_reduction_pct: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "duplex_mode", Duplex(self.duplex_mode))
        object.__setattr__(self, "frequency_range", FrequencyRange(self.frequency_range))
        if self.max_bandwidth_mhz <= 0:
            raise CapabilityError("max_bandwidth_mhz must be positive")
        if min(self.rx_branches, self.dl_mimo_layers, self.ul_mimo_layers) < 1:
            raise CapabilityError("rx_branches and MIMO layers must be ≥ 1")
        if self.dl_mimo_layers > self.rx_branches:
            raise CapabilityError(
                f"dl_mimo_layers={self.dl_mimo_layers} exceeds rx_branches={self.rx_branches}")
        for attr in ("max_dl_modulation_order", "max_ul_modulation_order"):
            if getattr(self, attr) not in (2, 4, 6, 8, 10):
                raise CapabilityError(f"{attr} must be one of 2, 4, 6, 8, 10 bits/symbol")
        if self.max_drbs not in (8, 16):
            raise CapabilityError("max_drbs must be 8 or 16")
        if self.sn_length_bits not in (12, 18):
            raise CapabilityError("sn_length_bits must be 12 or 18")
        if self.is_redcap:
            limit = REDCAP_MAX_BW_MHZ[self.frequency_range]
            if self.max_bandwidth_mhz > limit:
                raise CapabilityError(
                    f"RedCap {self.frequency_range.value} maximum device bandwidth is "
                    f"{limit:g} MHz, got {self.max_bandwidth_mhz:g} MHz")
            if self.rx_branches > 2:
                raise CapabilityError("RedCap devices support at most 2 receiver branches")
            if self.dl_mimo_layers > 2 or self.ul_mimo_layers > 2:
                raise CapabilityError("RedCap devices support at most 2 MIMO layers")

    def max_modulation(self, direction: Direction | str) -> int:
        if Direction(direction) is Direction.DL:
            return self.max_dl_modulation_order
        return self.max_ul_modulation_order

    def max_layers(self, direction: Direction | str) -> int:
        if Direction(direction) is Direction.DL:
            return self.dl_mimo_layers
        return self.ul_mimo_layers


_BUILTIN_PROFILES = {
    ProfileKind.ReferenceNrFr1: dict(
        max_bandwidth_mhz=100.0, rx_branches=2, dl_mimo_layers=2,
        max_dl_modulation_order=8, max_ul_modulation_order=6,
        duplex_mode=Duplex.FD_FDD, frequency_range=FrequencyRange.FR1,
        max_drbs=16, sn_length_bits=18, supports_anr=True, is_redcap=False,
        cost_reduction_pct=0.0),
    ProfileKind.ReferenceNrFr2: dict(
        max_bandwidth_mhz=200.0, rx_branches=2, dl_mimo_layers=2,
        max_dl_modulation_order=6, max_ul_modulation_order=6,
        duplex_mode=Duplex.TDD, frequency_range=FrequencyRange.FR2,
        max_drbs=16, sn_length_bits=18, supports_anr=True, is_redcap=False,
        panel_elements=4, cost_reduction_pct=0.0),
    ProfileKind.RedCapBaselineFr1: dict(
        max_bandwidth_mhz=20.0, rx_branches=1, dl_mimo_layers=1,
        max_dl_modulation_order=6, max_ul_modulation_order=6,
        duplex_mode=Duplex.HD_FDD, frequency_range=FrequencyRange.FR1,
        max_drbs=8, sn_length_bits=12, supports_anr=False, is_redcap=True,
        cost_reduction_pct=65.0),
    # FR2 RedCap keeps the reference minimum of 2 Rx branches; panels shrink instead.
    ProfileKind.RedCapBaselineFr2: dict(
        max_bandwidth_mhz=100.0, rx_branches=2, dl_mimo_layers=1,
        max_dl_modulation_order=6, max_ul_modulation_order=6,
        duplex_mode=Duplex.TDD, frequency_range=FrequencyRange.FR2,
        max_drbs=8, sn_length_bits=12, supports_anr=False, is_redcap=True,
        panel_elements=2, cost_reduction_pct=50.0),
}


def builtin_profile(kind: ProfileKind | str) -> CapabilityProfile:
    kind = ProfileKind(kind)
    return CapabilityProfile(name=kind.value, **_BUILTIN_PROFILES[kind])


# ---------------------------------------------------------------------------
# Carriers and deployments


@dataclass(frozen=True)
class CarrierConfig:
    scs_khz: int
    bandwidth_mhz: float
    duplex_mode: Duplex
    tdd_dl_fraction: float = 0.75
    frequency_range: FrequencyRange = FrequencyRange.FR1
    n_prb: Optional[int] = None
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "duplex_mode", Duplex(self.duplex_mode))
        object.__setattr__(self, "frequency_range", FrequencyRange(self.frequency_range))
        if self.scs_khz not in (15, 30, 60, 120):
            raise CapabilityError(f"unsupported SCS {self.scs_khz} kHz")
        if not 0.0 <= self.tdd_dl_fraction <= 1.0:
            raise CapabilityError("tdd_dl_fraction must lie in [0, 1]")
        if self.frequency_range is FrequencyRange.FR2:
            if self.scs_khz not in (60, 120):
                raise CapabilityError("FR2 carriers use 60 or 120 kHz SCS")
            if self.duplex_mode is not Duplex.TDD:
                raise CapabilityError("FR2 carriers are TDD")
        expected = n_prb_for(self.frequency_range, self.scs_khz, self.bandwidth_mhz)
        if self.n_prb is None:
            object.__setattr__(self, "n_prb", expected)
        elif self.n_prb != expected:
            raise CapabilityError(
                f"n_prb={self.n_prb} inconsistent with {self.bandwidth_mhz:g} MHz at "
                f"{self.scs_khz} kHz (expected {expected})")

    @property
    def symbols_per_second(self) -> float:
        return 14 * 1000.0 * (self.scs_khz // 15)


class DeploymentKind(str, Enum):
    RuralFR1 = "RuralFR1"
    UrbanMacroFR1 = "UrbanMacroFR1"
    UrbanMicroFR1 = "UrbanMicroFR1"
    IndoorFR2 = "IndoorFR2"
    Custom = "Custom"


@dataclass(frozen=True)
class DeploymentScenario:
    name: DeploymentKind
    carrier_freq_ghz: float
    dl_psd_dbm_per_mhz: float
    ue_trp_dbm: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", DeploymentKind(self.name))

    @property
    def frequency_range(self) -> FrequencyRange:
        return FrequencyRange.FR2 if self.carrier_freq_ghz >= 24.25 else FrequencyRange.FR1

    def with_trp(self, trp_dbm: float) -> "DeploymentScenario":
        return replace(self, ue_trp_dbm=trp_dbm)


_DEPLOYMENTS = {
    DeploymentKind.RuralFR1: (0.7, 33.0, 23.0),
    DeploymentKind.UrbanMacroFR1: (2.6, 33.0, 23.0),
    DeploymentKind.UrbanMicroFR1: (2.6, 24.0, 23.0),
    DeploymentKind.IndoorFR2: (28.0, 23.0, 23.0),
}


def builtin_deployment(kind: DeploymentKind | str) -> DeploymentScenario:
    kind = DeploymentKind(kind)
    if kind is DeploymentKind.Custom:
        raise ValueError("Custom deployments have no preset; construct DeploymentScenario directly")
    freq, psd, trp = _DEPLOYMENTS[kind]
    return DeploymentScenario(kind, freq, psd, trp)


# ---------------------------------------------------------------------------
# Use-case requirements


class UseCase(str, Enum):
    Wearables = "Wearables"
    IndustrialSensor = "IndustrialSensor"
    VideoSurveillance = "VideoSurveillance"
    Custom = "Custom"


@dataclass(frozen=True)
class Interval:
    low: float
    high: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "low", float(self.low))
        if self.high is not None:
            object.__setattr__(self, "high", float(self.high))
        if self.high is not None and self.low > self.high:
            raise ValueError(f"interval lower bound {self.low} exceeds upper bound {self.high}")


@dataclass(frozen=True)
class UseCaseRequirement:
    name: UseCase
    dl_rate_mbps: Optional[Interval] = None
    ul_rate_mbps: Optional[Interval] = None
    latency_ms: Optional[float] = None
    reliability: Optional[float] = None
    battery_lifetime: Optional[Interval] = None
    stationary: bool = False
    variant: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", UseCase(self.name))
        if self.reliability is not None and not 0.0 < self.reliability < 1.0:
            raise ValueError("reliability must lie in (0, 1)")

    @property
    def label(self) -> str:
        return f"{self.name.value}:{self.variant}" if self.variant else self.name.value


_HOURS_PER_DAY = 24.0
_HOURS_PER_YEAR = 8760.0

# "few days" is read as 3 days, "few years" as 3 years.
BUILTIN_REQUIREMENTS: tuple[UseCaseRequirement, ...] = (
    UseCaseRequirement(UseCase.Wearables, Interval(5, 50), Interval(2, 5),
                       battery_lifetime=Interval(3 * _HOURS_PER_DAY, 14 * _HOURS_PER_DAY),
                       stationary=False),
    UseCaseRequirement(UseCase.IndustrialSensor, Interval(2, 2), Interval(2, 2),
                       latency_ms=100.0, reliability=0.9999,
                       battery_lifetime=Interval(3 * _HOURS_PER_YEAR), stationary=True),
    UseCaseRequirement(UseCase.VideoSurveillance, Interval(2, 4), Interval(2, 4),
                       latency_ms=500.0, reliability=0.99, stationary=True,
                       variant="economic"),
    UseCaseRequirement(UseCase.VideoSurveillance, Interval(7.5, 25), Interval(7.5, 25),
                       latency_ms=500.0, reliability=0.99, stationary=True,
                       variant="high-end"),
)


def builtin_requirement(name: UseCase | str, variant: str = "") -> UseCaseRequirement:
    name = UseCase(name)
    for req in BUILTIN_REQUIREMENTS:
        if req.name is name and (req.variant == variant or not variant):
            return req
    raise KeyError(f"no builtin requirement {name.value!r} {variant!r}")


@dataclass(frozen=True)
class DimensionResult:
    dimension: str
    status: str  # "pass" | "fail" | "unevaluated"
    required: Optional[float]
    achieved: Optional[float]
    margin: Optional[float]


@dataclass(frozen=True)
class RequirementReport:
    requirement: str
    dimensions: tuple[DimensionResult, ...]

    @property
    def evaluated(self) -> tuple[DimensionResult, ...]:
        return tuple(d for d in self.dimensions if d.status != "unevaluated")

    @property
    def passed(self) -> bool:
        return all(d.status != "fail" for d in self.dimensions)

    def status_of(self, dimension: str) -> str:
        for d in self.dimensions:
            if d.dimension == dimension:
                return d.status
        return "not-required"


def check_requirements(req: UseCaseRequirement, achieved_dl_mbps: Optional[float] = None,
                       achieved_ul_mbps: Optional[float] = None,
                       achieved_lifetime_h: Optional[float] = None,
                       achieved_latency_ms: Optional[float] = None,
                       achieved_reliability: Optional[float] = None) -> RequirementReport:
    """Compare achieved figures with a use case's requirement.

    Rates and lifetime pass when at or above the requirement's lower bound,
    latency when at or below the bound. Margins are ``achieved - required``
    for the lower-bounded dimensions and ``required - achieved`` for latency,
    so a positive margin always means headroom. A dimension the requirement
    specifies but for which no achieved value is given is "unevaluated".
    """
    for value in (achieved_dl_mbps, achieved_ul_mbps, achieved_lifetime_h, achieved_latency_ms):
        if value is not None and value < 0:
            raise ValueError("achieved values must be non-negative")

    dims = []

    def at_least(dimension, bound, achieved):
        if bound is None:
            return
        if achieved is None:
            dims.append(DimensionResult(dimension, "unevaluated", bound, None, None))
            return
        margin = achieved - bound
        dims.append(DimensionResult(dimension, "pass" if margin >= 0 else "fail",
                                    bound, achieved, margin))

    at_least("dl_rate_mbps", req.dl_rate_mbps.low if req.dl_rate_mbps else None, achieved_dl_mbps)
    at_least("ul_rate_mbps", req.ul_rate_mbps.low if req.ul_rate_mbps else None, achieved_ul_mbps)
    at_least("battery_lifetime_h", req.battery_lifetime.low if req.battery_lifetime else None,
             achieved_lifetime_h)
    at_least("reliability", req.reliability, achieved_reliability)
    if req.latency_ms is not None:
        if achieved_latency_ms is None:
            dims.append(DimensionResult("latency_ms", "unevaluated", req.latency_ms, None, None))
        else:
            margin = req.latency_ms - achieved_latency_ms
            dims.append(DimensionResult("latency_ms", "pass" if margin >= 0 else "fail",
                                        req.latency_ms, achieved_latency_ms, margin))
    return RequirementReport(req.label, tuple(dims))


# ---------------------------------------------------------------------------
# Plain-dict conversion used by the scenario file layer


def to_dict(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return obj.value
    if hasattr(obj, "__dataclass_fields__"):
        return {f.name: to_dict(getattr(obj, f.name)) for f in fields(obj)
                if f.metadata.get("serialize", True)}
    if isinstance(obj, (list, tuple)):
        return [to_dict(v) for v in obj]
    if isinstance(obj, dict):
        return {str(to_dict(k)): to_dict(v) for k, v in obj.items()}
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


def profile_from_dict(data: dict) -> CapabilityProfile:
    return CapabilityProfile(**data)


def requirement_from_dict(data: dict) -> UseCaseRequirement:
    data = dict(data)
    for key in ("dl_rate_mbps", "ul_rate_mbps", "battery_lifetime"):
        if data.get(key) is not None:
            data[key] = Interval(**data[key])
    return UseCaseRequirement(**data)
