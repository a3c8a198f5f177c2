"""Idle/inactive (e)DRX power model, battery lifetime and RRM relaxation.

All powers are relative units; energies are unit-seconds. Per DRX cycle the
device is awake for ``t_paging_monitor_s`` at ``p_paging_monitor`` and pays
two sleep/wake transitions. Each data event occupies ``t_data_session_s`` at
``p_data_session`` plus two transitions. Any time not spent awake is spent at
the sleep floor of the RRC state (deep sleep in idle, light sleep in
inactive).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np

BASELINE_DRX_CYCLE_S = 2.56
MAX_EDRX_IDLE_S = 10485.76
MAX_EDRX_INACTIVE_S = 10.24


class RrcState(str, Enum):
    Idle = "Idle"
    Inactive = "Inactive"


class ArrivalProcess(str, Enum):
    Periodic = "Periodic"
    Poisson = "Poisson"


class Release(str, Enum):
    R15 = "R15"
    R16 = "R16"
    R17 = "R17"


@dataclass(frozen=True)
class PowerModel:
    p_deep_sleep: float = 0.003
    p_light_sleep: float = 0.03
    p_paging_monitor: float = 100.0
    p_data_session: float = 300.0
    t_paging_monitor_s: float = 0.012
    t_data_session_s: float = 0.1
    e_transition: float = 0.45
    battery_capacity_unit_s: float = 4.5e6
    e_rrm_measurement: float = 1.5

    def __post_init__(self) -> None:
        if not (0 < self.p_deep_sleep < self.p_light_sleep < self.p_paging_monitor
                <= self.p_data_session):
            raise ValueError("powers must satisfy 0 < deep < light < paging <= data")
        if self.battery_capacity_unit_s <= 0:
            raise ValueError("battery capacity must be positive")
        for name in ("t_paging_monitor_s", "t_data_session_s", "e_transition",
                     "e_rrm_measurement"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def sleep_power(self, state: RrcState) -> float:
        return self.p_deep_sleep if state is RrcState.Idle else self.p_light_sleep


@dataclass(frozen=True)
class DrxConfig:
    rrc_state: RrcState
    cycle_s: float
    edrx_enabled: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "rrc_state", RrcState(self.rrc_state))
        if self.cycle_s <= 0:
            raise ValueError("cycle_s must be positive")
        if not self.edrx_enabled:
            cap = BASELINE_DRX_CYCLE_S
        elif self.rrc_state is RrcState.Idle:
            cap = MAX_EDRX_IDLE_S
        else:
            cap = MAX_EDRX_INACTIVE_S
        if self.cycle_s > cap:
            raise ValueError(f"{self.rrc_state.value} cycle {self.cycle_s} s exceeds the "
                             f"{cap} s cap (edrx_enabled={self.edrx_enabled})")

    @classmethod
    def for_cycle(cls, rrc_state: RrcState | str, cycle_s: float) -> "DrxConfig":
        """eDRX is switched on only when the cycle needs it."""
        return cls(RrcState(rrc_state), cycle_s, edrx_enabled=cycle_s > BASELINE_DRX_CYCLE_S)

    @property
    def dl_latency_s(self) -> float:
        """Expected paging delay for a uniformly timed DL arrival."""
        return self.cycle_s / 2.0


@dataclass(frozen=True)
class TrafficPattern:
    iat_s: float
    arrival_process: ArrivalProcess = ArrivalProcess.Periodic

    def __post_init__(self) -> None:
        object.__setattr__(self, "arrival_process", ArrivalProcess(self.arrival_process))
        if not self.iat_s > 0:
            raise ValueError("iat_s must be positive")


NO_TRAFFIC = TrafficPattern(math.inf)


def _check_cycle(model: PowerModel, drx: DrxConfig) -> None:
    if model.t_paging_monitor_s >= drx.cycle_s:
        raise ValueError(f"wake time {model.t_paging_monitor_s} s does not fit in a "
                         f"{drx.cycle_s} s cycle")


def paging_energy(model: PowerModel, rrm_duty: float = 0.0) -> float:
    """Energy above the sleep floor spent per paging occasion, excluding sleep."""
    return (model.t_paging_monitor_s * model.p_paging_monitor + 2 * model.e_transition
            + rrm_duty * model.e_rrm_measurement)


def data_energy(model: PowerModel) -> float:
    return model.t_data_session_s * model.p_data_session + 2 * model.e_transition


def avg_power(model: PowerModel, drx: DrxConfig, traffic: TrafficPattern,
              rrm_duty: float = 0.0) -> float:
    _check_cycle(model, drx)
    sleep = model.sleep_power(drx.rrc_state)
    awake_fraction = model.t_paging_monitor_s / drx.cycle_s
    paging = paging_energy(model, rrm_duty) / drx.cycle_s
    data = 0.0
    if math.isfinite(traffic.iat_s):
        awake_fraction += model.t_data_session_s / traffic.iat_s
        data = data_energy(model) / traffic.iat_s
    return sleep * (1.0 - awake_fraction) + paging + data


def battery_lifetime(model: PowerModel, drx: DrxConfig, traffic: TrafficPattern,
                     rrm_duty: float = 0.0) -> float:
    """Battery lifetime in hours."""
    return model.battery_capacity_unit_s / avg_power(model, drx, traffic, rrm_duty) / 3600.0


def lifetime_ratio(model: PowerModel, rrc_state: RrcState | str, cycle_s: float,
                   traffic: TrafficPattern) -> float:
    """Lifetime at ``cycle_s`` relative to the 2.56 s non-eDRX baseline."""
    base = battery_lifetime(model, DrxConfig(rrc_state, BASELINE_DRX_CYCLE_S), traffic)
    return battery_lifetime(model, DrxConfig.for_cycle(rrc_state, cycle_s), traffic) / base


# ---------------------------------------------------------------------------
# Event-driven oracle


def _arrivals(traffic: TrafficPattern, horizon_s: float, rng: np.random.Generator) -> Iterator[float]:
    if not math.isfinite(traffic.iat_s):
        return
    if traffic.arrival_process is ArrivalProcess.Periodic:
        # half-period phase keeps the event count within half an event of horizon/iat
        t = 0.5 * traffic.iat_s
        k = 0
        while t < horizon_s:
            yield t
            k += 1
            t = (k + 0.5) * traffic.iat_s
    else:
        t = rng.exponential(traffic.iat_s)
        while t < horizon_s:
            yield t
            t += rng.exponential(traffic.iat_s)


def simulate_energy(model: PowerModel, drx: DrxConfig, traffic: TrafficPattern,
                    horizon_s: float, seed: int = 0, rrm_duty: float = 0.0) -> float:
    """Total energy over ``horizon_s`` by walking paging and data events in time order.

    An event that starts while the device is still awake from a previous
    one is deferred until that activity ends.
    """
    _check_cycle(model, drx)
    if horizon_s < 100 * drx.cycle_s:
        raise ValueError(f"horizon {horizon_s} s covers fewer than 100 DRX cycles")
    rng = np.random.default_rng(seed)
    sleep = model.sleep_power(drx.rrc_state)
    n_po = int(math.floor(horizon_s / drx.cycle_s))
    paging = ((k * drx.cycle_s, 0) for k in range(n_po))
    data = ((t, 1) for t in _arrivals(traffic, horizon_s, rng))
    kinds = {
        0: (model.t_paging_monitor_s, model.p_paging_monitor,
            2 * model.e_transition + rrm_duty * model.e_rrm_measurement),
        1: (model.t_data_session_s, model.p_data_session, 2 * model.e_transition),
    }

    energy = 0.0
    cursor = 0.0
    for t, kind in heapq.merge(paging, data):
        if cursor >= horizon_s:
            break
        duration, power, overhead = kinds[kind]
        start = max(t, cursor)
        energy += (start - cursor) * sleep
        end = min(start + duration, horizon_s)
        energy += (end - start) * power + overhead
        cursor = end
    if cursor < horizon_s:
        energy += (horizon_s - cursor) * sleep
    return energy


# ---------------------------------------------------------------------------
# Neighbour-cell RRM measurement relaxation


@dataclass(frozen=True)
class RrmThresholds:
    """Serving-cell thresholds gating neighbour-measurement relaxation.

    Ordering: ``low_mobility_rsrp_dbm <= cell_edge_rsrp_dbm <= search_rsrp_dbm``.
    Low-mobility relaxation needs the serving RSRP above the low-mobility
    floor; "not at cell edge" needs RSRP and RSRQ above the cell-edge
    thresholds; skipping per the legacy rule needs both above the search
    thresholds. ``rates`` are the fractions of occasions still measured
    (legacy skip, low mobility, low mobility + not at edge, stationary).
    """
    low_mobility_rsrp_dbm: float = -115.0
    cell_edge_rsrp_dbm: float = -105.0
    cell_edge_rsrq_db: float = -15.0
    search_rsrp_dbm: float = -90.0
    search_rsrq_db: float = -10.0
    low_mobility_delta_db: float = 3.0
    rates: tuple[float, float, float, float] = (1 / 4, 1 / 8, 1 / 16, 1 / 32)

    def __post_init__(self) -> None:
        if not (self.low_mobility_rsrp_dbm <= self.cell_edge_rsrp_dbm <= self.search_rsrp_dbm):
            raise ValueError("thresholds must satisfy low-mobility <= cell-edge <= search")
        if self.cell_edge_rsrq_db > self.search_rsrq_db:
            raise ValueError("cell-edge RSRQ threshold must not exceed the search threshold")
        r1, r2, r3, r4 = self.rates
        if not 1.0 >= r1 >= r2 >= r3 >= r4 > 0.0:
            raise ValueError("relaxed rates must satisfy 1 >= r1 >= r2 >= r3 >= r4 > 0")


def rrm_duty_cycle(stationary: bool, serving_rsrp_dbm: float, serving_rsrq_db: float,
                   thresholds: RrmThresholds = RrmThresholds(), release: Release | str = Release.R17,
                   rsrp_variation_db: float | None = None) -> float:
    """Fraction of paging occasions that still need neighbour-cell measurements.

    Each newer release only adds relaxation options, so the result is the
    minimum over the rules the release enables. Without an explicit
    ``rsrp_variation_db`` the low-mobility condition follows ``stationary``.
    """
    release = Release(release)
    th = thresholds
    r1, r2, r3, r4 = th.rates
    duty = 1.0
    if serving_rsrp_dbm > th.search_rsrp_dbm and serving_rsrq_db > th.search_rsrq_db:
        duty = r1
    if release is Release.R15:
        return duty

    if rsrp_variation_db is None:
        low_mobility = stationary
    else:
        low_mobility = rsrp_variation_db <= th.low_mobility_delta_db
    low_mobility = low_mobility and serving_rsrp_dbm > th.low_mobility_rsrp_dbm
    not_at_edge = serving_rsrp_dbm > th.cell_edge_rsrp_dbm and serving_rsrq_db > th.cell_edge_rsrq_db
    if low_mobility:
        duty = min(duty, r3 if not_at_edge else r2)
    if release is Release.R16:
        return duty

    if stationary and low_mobility:
        duty = min(duty, r4 if not_at_edge else r3)
    return duty
