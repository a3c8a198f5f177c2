"""Per-channel maximum isotropic loss (MIL), bottleneck search and
coverage-recovery deltas between a RedCap device and the reference device.

Channel parameters and required SNRs are plain CSV data under ``data/``:

``link_channels.csv``
    scenario, channel, direction, occupied_bandwidth_hz, noise_figure_db,
    bs_gain_db, ue_gain_db. Noise figure is the receiver's (UE for DL,
    base station for UL).
``link_snr.csv``
    scenario, device (``reference`` | ``redcap``), rx_branches, channel,
    required_snr_db.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import (CapabilityProfile, DeploymentScenario, Direction, FrequencyRange,
                    ProfileKind, builtin_profile)


class Channel(str, Enum):
    # declaration order is the bottleneck tie-break order
    Msg1_PRACH = "Msg1_PRACH"
    Msg2_PDSCH = "Msg2_PDSCH"
    Msg3_PUSCH = "Msg3_PUSCH"
    Msg4_PDSCH = "Msg4_PDSCH"
    PUCCH = "PUCCH"
    PDCCH_CSS = "PDCCH_CSS"
    PDSCH = "PDSCH"
    PUSCH = "PUSCH"


_CHANNEL_ORDER = {ch: i for i, ch in enumerate(Channel)}
EFFICIENCY_PENALTY_DB = 3.0


class ScenarioMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelLinkParams:
    channel: Channel
    direction: Direction
    tx_power_dbm: float
    tx_bf_gain_db: float
    rx_bf_gain_db: float
    required_snr_db: float
    noise_figure_db: float
    occupied_bandwidth_hz: float
    antenna_efficiency_penalty_db: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "channel", Channel(self.channel))
        object.__setattr__(self, "direction", Direction(self.direction))
        if not self.occupied_bandwidth_hz > 0:
            raise ValueError("occupied_bandwidth_hz must be positive")
        if not math.isfinite(self.required_snr_db):
            raise ValueError("required_snr_db must be finite")


def thermal_noise_dbm(bandwidth_hz: float) -> float:
    return -174.0 + 10.0 * math.log10(bandwidth_hz)


def dl_tx_power_from_psd(psd_dbm_per_mhz: float, bandwidth_mhz: float) -> float:
    if bandwidth_mhz <= 0:
        raise ValueError("bandwidth_mhz must be positive")
    return psd_dbm_per_mhz + 10.0 * math.log10(bandwidth_mhz)


def mil(p: ChannelLinkParams) -> float:
    noise_floor = thermal_noise_dbm(p.occupied_bandwidth_hz) + p.noise_figure_db
    return (p.tx_power_dbm + p.tx_bf_gain_db + p.rx_bf_gain_db
            - p.antenna_efficiency_penalty_db - (noise_floor + p.required_snr_db))


def bottleneck(channels: Iterable[tuple[ChannelLinkParams, float]]) -> tuple[Channel, float]:
    """Lowest-MIL entry; equal MILs resolve by channel declaration order."""
    channels = list(channels)
    if not channels:
        raise ValueError("bottleneck of an empty channel list")
    params, value = min(channels, key=lambda e: (e[1], _CHANNEL_ORDER[e[0].channel]))
    return params.channel, value


# ---------------------------------------------------------------------------
# Tables


@dataclass(frozen=True)
class LinkTables:
    channels: tuple[dict, ...]
    snr: tuple[dict, ...]

    @classmethod
    def from_csv(cls, channels_path: str | Path, snr_path: str | Path) -> "LinkTables":
        return cls(_read_rows(Path(channels_path).read_text()), _read_rows(Path(snr_path).read_text()))

    def channel_rows(self, scenario_key: str) -> list[dict]:
        rows = [r for r in self.channels if r["scenario"] == scenario_key]
        if not rows:
            raise KeyError(f"no channel parameters for scenario {scenario_key!r}")
        return rows

    def required_snr(self, scenario_key: str, device: str, rx_branches: int, channel: Channel) -> float:
        for r in self.snr:
            if (r["scenario"] == scenario_key and r["device"] == device
                    and int(r["rx_branches"]) == rx_branches and r["channel"] == channel.value):
                return float(r["required_snr_db"])
        raise KeyError(f"no required SNR for {scenario_key}/{device}/{rx_branches}Rx/{channel.value}")


def _read_rows(text: str) -> tuple[dict, ...]:
    return tuple(csv.DictReader(text.splitlines()))


@lru_cache(maxsize=1)
def default_tables() -> LinkTables:
    data = resources.files("redcap_dim") / "data"
    return LinkTables(_read_rows((data / "link_channels.csv").read_text()),
                      _read_rows((data / "link_snr.csv").read_text()))


# ---------------------------------------------------------------------------
# Channel sets and recovery


@dataclass(frozen=True)
class ChannelSet:
    scenario: DeploymentScenario
    device: str
    entries: tuple[tuple[ChannelLinkParams, float], ...]

    def mil_of(self, channel: Channel | str) -> float:
        channel = Channel(channel)
        for p, value in self.entries:
            if p.channel is channel:
                return value
        raise KeyError(channel)

    def bottleneck(self) -> tuple[Channel, float]:
        return bottleneck(self.entries)


def make_channel_set(scenario: DeploymentScenario, params: Sequence[ChannelLinkParams],
                     device: str = "custom") -> ChannelSet:
    return ChannelSet(scenario, device, tuple((p, mil(p)) for p in params))


def build_channel_set(scenario: DeploymentScenario, profile: CapabilityProfile,
                      tables: Optional[LinkTables] = None,
                      efficiency_penalty: bool = False,
                      apply_panel_reduction: bool = False,
                      table_key: Optional[str] = None) -> ChannelSet:
    """Evaluate every tabulated channel for ``profile`` in ``scenario``.

    DL transmit power follows the scenario PSD over the channel's occupied
    bandwidth; UL transmit power is the scenario's UE TRP. The optional
    antenna-efficiency penalty applies to RedCap devices only.
    ``apply_panel_reduction`` subtracts the array-gain loss of a RedCap FR2
    panel with fewer elements than the reference (off by default).
    """
    tables = tables or default_tables()
    key = table_key or scenario.name.value
    device = "redcap" if profile.is_redcap else "reference"
    penalty = EFFICIENCY_PENALTY_DB if (efficiency_penalty and profile.is_redcap) else 0.0
    panel_loss = 0.0
    if apply_panel_reduction and profile.is_redcap and profile.panel_elements:
        panel_loss = 10.0 * math.log10(4 / profile.panel_elements)

    params = []
    for row in tables.channel_rows(key):
        channel = Channel(row["channel"])
        direction = Direction(row["direction"])
        bw_hz = float(row["occupied_bandwidth_hz"])
        bs_gain = float(row["bs_gain_db"])
        ue_gain = float(row["ue_gain_db"]) - panel_loss
        if direction is Direction.DL:
            tx_power = dl_tx_power_from_psd(scenario.dl_psd_dbm_per_mhz, bw_hz / 1e6)
            tx_gain, rx_gain = bs_gain, ue_gain
        else:
            tx_power = scenario.ue_trp_dbm
            tx_gain, rx_gain = ue_gain, bs_gain
        params.append(ChannelLinkParams(
            channel, direction, tx_power, tx_gain, rx_gain,
            tables.required_snr(key, device, profile.rx_branches, channel),
            float(row["noise_figure_db"]), bw_hz, penalty))
    return make_channel_set(scenario, params, device)


@dataclass(frozen=True)
class RecoveryEntry:
    channel: Channel
    direction: Direction
    mil_db: float
    recovery_db: float
    is_bottleneck: bool

    @property
    def flagged(self) -> bool:
        return self.recovery_db > 0.0


def coverage_recovery(redcap: ChannelSet, reference: ChannelSet) -> list[RecoveryEntry]:
    """Recovery per RedCap channel against the reference bottleneck MIL."""
    if redcap.scenario != reference.scenario:
        raise ScenarioMismatchError(
            f"RedCap set evaluated in {redcap.scenario.name.value}, reference in "
            f"{reference.scenario.name.value} (or with different parameters)")
    _, target = reference.bottleneck()
    own_bottleneck, _ = redcap.bottleneck()
    return [RecoveryEntry(p.channel, p.direction, value, max(0.0, target - value),
                          p.channel is own_bottleneck)
            for p, value in redcap.entries]


def flagged_channels(entries: Iterable[RecoveryEntry]) -> set[Channel]:
    return {e.channel for e in entries if e.flagged}


def fr2_trp_sensitivity(scenario: DeploymentScenario, trp_dbm: float,
                        redcap: Optional[CapabilityProfile] = None,
                        reference: Optional[CapabilityProfile] = None,
                        tables: Optional[LinkTables] = None) -> list[RecoveryEntry]:
    """Coverage recovery with both devices transmitting at ``trp_dbm`` TRP."""
    if scenario.frequency_range is not FrequencyRange.FR2:
        raise ValueError(f"{scenario.name.value} is not an FR2 scenario")
    scn = replace(scenario, ue_trp_dbm=trp_dbm)
    redcap = redcap or builtin_profile(ProfileKind.RedCapBaselineFr2)
    reference = reference or builtin_profile(ProfileKind.ReferenceNrFr2)
    return coverage_recovery(build_channel_set(scn, redcap, tables),
                             build_channel_set(scn, reference, tables))
