"""Random-access walk-through with RedCap identification timing, SIB1 barring
and PRB accounting for the scheduling mode used before identification.

Until the network knows whether a device is RedCap it schedules Msg2/Msg3/Msg4
in the narrow mode every device can receive. Narrow mode is the costlier one
(more PRBs for the same payload, e.g. lower MIMO rank and more repetitions),
so earlier identification saves PRBs for non-RedCap devices.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import CapabilityProfile, to_dict


class IdMethod(str, Enum):
    Msg1SeparatePrach = "Msg1SeparatePrach"
    Msg3Lcid = "Msg3Lcid"
    PostMsg4Capability = "PostMsg4Capability"

    @classmethod
    def parse(cls, value: "IdMethod | str") -> "IdMethod":
        # 2-step RACH carries the same indication in MsgA, so it shares Msg3 timing
        if value == "MsgA":
            return cls.Msg3Lcid
        return cls(value)


class IdPoint(str, Enum):
    Msg1 = "Msg1"
    Msg3 = "Msg3"
    PostMsg4 = "PostMsg4"
    Never = "Never"


class Mode(str, Enum):
    narrow = "narrow"
    wide = "wide"


SCHEDULED_MESSAGES = ("Msg2", "Msg3", "Msg4")
DEFAULT_PRB_COSTS = {
    "Msg2": {"narrow": 12, "wide": 6},
    "Msg3": {"narrow": 8, "wide": 4},
    "Msg4": {"narrow": 24, "wide": 12},
}
# delay from the previous step to the start of each message, in ms
DEFAULT_STEP_DELAYS_MS = {"Msg2": 3.0, "Msg3": 4.0, "Msg4": 6.0, "Connected": 10.0}


@dataclass(frozen=True)
class AccessConfig:
    id_method: IdMethod = IdMethod.Msg3Lcid
    redcap_barred: bool = False
    prach_periodicity_ms: float = 10.0
    msg_prb_costs: Mapping[str, Mapping[str, int]] = field(
        default_factory=lambda: {k: dict(v) for k, v in DEFAULT_PRB_COSTS.items()})
    redcap_supported: bool = True
    step_delays_ms: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_STEP_DELAYS_MS))
    arrival_window_ms: float = 100.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "id_method", IdMethod.parse(self.id_method))
        if not self.prach_periodicity_ms > 0:
            raise ValueError("prach_periodicity_ms must be positive")
        if self.arrival_window_ms < 0:
            raise ValueError("arrival_window_ms must be non-negative")
        if set(self.msg_prb_costs) != set(SCHEDULED_MESSAGES):
            raise ValueError(f"msg_prb_costs needs exactly {', '.join(SCHEDULED_MESSAGES)}")
        for msg, cost in self.msg_prb_costs.items():
            if set(cost) != {"narrow", "wide"}:
                raise ValueError(f"{msg} costs need 'narrow' and 'wide' entries")
            if min(cost.values()) <= 0:
                raise ValueError(f"{msg} PRB costs must be positive")
            if cost["narrow"] < cost["wide"]:
                raise ValueError(f"{msg}: narrow-mode cost must not be below wide-mode cost")
        if set(self.step_delays_ms) != set(DEFAULT_STEP_DELAYS_MS):
            raise ValueError(f"step_delays_ms needs exactly {', '.join(DEFAULT_STEP_DELAYS_MS)}")
        if min(self.step_delays_ms.values()) < 0:
            raise ValueError("step delays must be non-negative")


@dataclass(frozen=True)
class AccessOutcome:
    device_id: int
    is_redcap: bool
    identified_at: IdPoint
    barred: bool
    total_prbs_scheduled: int
    time_to_connected_ms: Optional[float]
    prbs_per_message: dict

    def __post_init__(self) -> None:
        if self.barred and (self.total_prbs_scheduled or self.identified_at is not IdPoint.Never):
            raise ValueError("a barred device schedules nothing and is never identified")


@dataclass(frozen=True)
class AccessStats:
    n_devices: int
    n_redcap: int
    n_barred: int
    n_connected: int
    identified: dict
    total_prbs: int
    total_prbs_redcap: int
    total_prbs_non_redcap: int
    mean_time_to_connected_ms: Optional[float]


def _blocked(cfg: AccessConfig, device: CapabilityProfile) -> bool:
    return device.is_redcap and (cfg.redcap_barred or not cfg.redcap_supported)


def identification_point(cfg: AccessConfig, device: CapabilityProfile) -> IdPoint:
    if _blocked(cfg, device):
        return IdPoint.Never
    if not cfg.redcap_supported:
        # nothing to tell apart: every device gets wide-mode scheduling from the start
        return IdPoint.Msg1
    if cfg.id_method is IdMethod.Msg1SeparatePrach:
        return IdPoint.Msg1
    if cfg.id_method is IdMethod.Msg3Lcid:
        return IdPoint.Msg3
    return IdPoint.PostMsg4


# messages scheduled before the network has identified the device
_UNIDENTIFIED = {
    IdPoint.Msg1: (),
    IdPoint.Msg3: ("Msg2", "Msg3"),
    IdPoint.PostMsg4: ("Msg2", "Msg3", "Msg4"),
}


def message_mode(point: IdPoint, device: CapabilityProfile, msg: str) -> Mode:
    if msg in _UNIDENTIFIED[point]:
        return Mode.narrow
    return Mode.narrow if device.is_redcap else Mode.wide


def simulate_access(devices: Sequence[CapabilityProfile], cfg: AccessConfig,
                    seed: int) -> tuple[list[AccessOutcome], AccessStats]:
    """Walk every device through the 4-step procedure in time order.

    Each device wakes at a uniform time in the arrival window and sends its
    preamble at the next PRACH occasion. Wake times are drawn for every
    device before barring is applied, so barring never shifts another
    device's timeline.
    """
    if not devices:
        raise ValueError("simulate_access needs at least one device")
    rng = np.random.default_rng(seed)
    wake = rng.uniform(0.0, cfg.arrival_window_ms, size=len(devices))
    period = cfg.prach_periodicity_ms
    steps = ("Msg2", "Msg3", "Msg4", "Connected")

    events: list[tuple[float, int, int]] = []
    for i, dev in enumerate(devices):
        if not _blocked(cfg, dev):
            msg1 = float(np.ceil(wake[i] / period)) * period
            heapq.heappush(events, (msg1 + cfg.step_delays_ms["Msg2"], i, 0))

    prbs = [dict.fromkeys(SCHEDULED_MESSAGES, 0) for _ in devices]
    connected_at: dict[int, float] = {}
    points = [identification_point(cfg, d) for d in devices]
    while events:
        t, i, k = heapq.heappop(events)
        step = steps[k]
        if step == "Connected":
            connected_at[i] = t
            continue
        # the message starting now follows the previous step's delay
        mode = message_mode(points[i], devices[i], step)
        prbs[i][step] = int(cfg.msg_prb_costs[step][mode.value])
        heapq.heappush(events, (t + cfg.step_delays_ms[steps[k + 1]], i, k + 1))

    outcomes = []
    for i, dev in enumerate(devices):
        blocked = _blocked(cfg, dev)
        ttc = None if blocked else connected_at[i] - float(wake[i])
        outcomes.append(AccessOutcome(i, dev.is_redcap, points[i], blocked,
                                      sum(prbs[i].values()), ttc, prbs[i]))
    return outcomes, aggregate(outcomes)


def aggregate(outcomes: Sequence[AccessOutcome]) -> AccessStats:
    connected = [o.time_to_connected_ms for o in outcomes if o.time_to_connected_ms is not None]
    identified = {p.value: sum(o.identified_at is p for o in outcomes) for p in IdPoint}
    return AccessStats(
        n_devices=len(outcomes),
        n_redcap=sum(o.is_redcap for o in outcomes),
        n_barred=sum(o.barred for o in outcomes),
        n_connected=len(connected),
        identified=identified,
        total_prbs=sum(o.total_prbs_scheduled for o in outcomes),
        total_prbs_redcap=sum(o.total_prbs_scheduled for o in outcomes if o.is_redcap),
        total_prbs_non_redcap=sum(o.total_prbs_scheduled for o in outcomes if not o.is_redcap),
        mean_time_to_connected_ms=(sum(connected) / len(connected)) if connected else None,
    )


def stats_row(stats: AccessStats) -> dict:
    """Aggregate as one flat row, identification counts spread into columns."""
    row = to_dict(stats)
    identified = row.pop("identified")
    for point, n in identified.items():
        row[f"identified_{point}"] = n
    return row
