"""Approximate peak physical-layer data rates.

    rate = layers * Qm * R * f * (N_PRB * 12) * symbols/s * (1 - OH) * duplex share

The default overheads are calibration constants, chosen so the baseline
RedCap configurations land on the commonly quoted peak rates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (CapabilityProfile, CarrierConfig, Direction, Duplex,
                    FrequencyRange)

DEFAULT_CODE_RATE = 948 / 1024

DEFAULT_OVERHEAD = {
    (FrequencyRange.FR1, Direction.DL): 0.14,
    (FrequencyRange.FR1, Direction.UL): 0.08,
    (FrequencyRange.FR2, Direction.DL): 0.18,
    (FrequencyRange.FR2, Direction.UL): 0.10,
}


class CapabilityExceededError(ValueError):
    def __init__(self, limit: str, requested, allowed):
        super().__init__(f"{limit}: requested {requested}, device limit {allowed}")
        self.limit = limit
        self.requested = requested
        self.allowed = allowed


@dataclass(frozen=True)
class RateParams:
    layers: int = 1
    modulation_order: int = 6
    code_rate_max: float = DEFAULT_CODE_RATE
    overhead_fraction: float = 0.14
    scaling_factor: float = 1.0

    def __post_init__(self) -> None:
        if self.layers < 1:
            raise ValueError("layers must be ≥ 1")
        if self.modulation_order not in (2, 4, 6, 8):
            raise ValueError("modulation_order must be one of 2, 4, 6, 8")
        if not 0.0 < self.code_rate_max <= 1.0:
            raise ValueError("code_rate_max must lie in (0, 1]")
        if not 0.0 <= self.overhead_fraction < 1.0:
            raise ValueError("overhead_fraction must lie in [0, 1)")
        if not 0.0 < self.scaling_factor <= 1.0:
            raise ValueError("scaling_factor must lie in (0, 1]")

    @classmethod
    def defaults(cls, profile: CapabilityProfile, carrier: CarrierConfig,
                 direction: Direction | str) -> "RateParams":
        """Highest layers/modulation the profile allows, with the shipped overhead."""
        direction = Direction(direction)
        return cls(layers=profile.max_layers(direction),
                   modulation_order=min(profile.max_modulation(direction), 8),
                   overhead_fraction=DEFAULT_OVERHEAD[(carrier.frequency_range, direction)])


def duplex_share(carrier: CarrierConfig, direction: Direction | str) -> float:
    if carrier.duplex_mode is Duplex.TDD:
        dl = carrier.tdd_dl_fraction
        return dl if Direction(direction) is Direction.DL else 1.0 - dl
    return 1.0


def peak_rate(profile: CapabilityProfile, carrier: CarrierConfig, direction: Direction | str,
              params: Optional[RateParams] = None) -> float:
    """Peak rate in Mbps for one link direction.

    HD-FDD carriers are evaluated as full-duplex here; apply
    :func:`hd_fdd_rates` to split time between the directions.
    """
    direction = Direction(direction)
    if params is None:
        params = RateParams.defaults(profile, carrier, direction)
    if carrier.frequency_range is not profile.frequency_range:
        raise CapabilityExceededError("frequency_range", carrier.frequency_range.value,
                                      profile.frequency_range.value)
    if carrier.bandwidth_mhz > profile.max_bandwidth_mhz:
        raise CapabilityExceededError("max_bandwidth_mhz", carrier.bandwidth_mhz,
                                      profile.max_bandwidth_mhz)
    if params.modulation_order > profile.max_modulation(direction):
        raise CapabilityExceededError(f"max_{direction.value.lower()}_modulation_order",
                                      params.modulation_order, profile.max_modulation(direction))
    if params.layers > profile.max_layers(direction):
        raise CapabilityExceededError(f"{direction.value.lower()}_mimo_layers",
                                      params.layers, profile.max_layers(direction))

    return raw_rate_mbps(carrier.n_prb, carrier.scs_khz, params,
                         duplex_share(carrier, direction))


def raw_rate_mbps(n_prb: int, scs_khz: int, params: RateParams, share: float = 1.0) -> float:
    """The bare rate formula, without any capability checks."""
    symbols_per_second = 14 * 1000.0 * (scs_khz // 15)
    bps = (params.layers * params.modulation_order * params.code_rate_max
           * params.scaling_factor * n_prb * 12 * symbols_per_second
           * (1.0 - params.overhead_fraction) * share)
    return bps * 1e-6


def hd_fdd_rates(dl_rate: float, ul_rate: float, dl_time_share: float) -> tuple[float, float]:
    if dl_rate <= 0 or ul_rate <= 0:
        raise ValueError("rates must be positive")
    if not 0.0 < dl_time_share < 1.0:
        raise ValueError("dl_time_share must lie strictly between 0 and 1")
    return dl_rate * dl_time_share, ul_rate * (1.0 - dl_time_share)
