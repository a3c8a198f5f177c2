"""Multi-cell downlink capacity of mixed eMBB/RedCap populations.

Layout: hexagonal sites (centre site first, then rings) with omni cells.
Users are dropped uniformly in their cell's hexagon and served by that
cell. Received power follows a single-slope urban-macro loss with log-normal
shadowing. Every other cell interferes at full power (full-buffer
approximation), so SINR does not depend on load. Shadowing is partly
common to all sites of a user (``shadowing_site_correlation``). SINR maps to spectral
efficiency with an attenuated Shannon bound, capped by the profile's
modulation order times layers.

Load axis: a load point is a number of eMBB users per cell; each point
carries ``round(n_embb * f / (1 - f))`` RedCap users so the user mix matches
the RedCap fraction ``f``. The sweep stops at ``users_per_cell`` users in
total. Each user class draws from its own randomized quasi-Monte Carlo
stream, and the first ``n`` users of a class are identical across load
points and fractions, so sweeps compare like with like.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from . import kernels
from .model import (CapabilityProfile, FrequencyRange, ProfileKind, builtin_profile,
                    max_prb_within, n_prb_for)


class Scheduler(str, Enum):
    RoundRobin = "RoundRobin"
    ProportionalFair = "ProportionalFair"


@dataclass(frozen=True)
class TrafficModel:
    payload_bytes: int
    period_s: float

    def __post_init__(self) -> None:
        if self.payload_bytes <= 0 or not self.period_s > 0:
            raise ValueError("payload_bytes and period_s must be positive")

    @property
    def offered_bps(self) -> float:
        return self.payload_bytes * 8 / self.period_s


EMBB_TRAFFIC = TrafficModel(500_000, 0.2)
REDCAP_TRAFFIC = TrafficModel(100_000, 2.0)


def offered_load(users: Iterable[tuple[CapabilityProfile, TrafficModel]]) -> float:
    """Offered load in bit/s of the given users."""
    return float(sum(t.offered_bps for _, t in users))


@dataclass(frozen=True)
class SinrToSe:
    attenuation: float = 0.6
    sinr_min_db: float = -10.0
    sinr_max_db: float = 30.0

    def cap(self, profile: CapabilityProfile) -> float:
        return float(profile.max_dl_modulation_order * profile.dl_mimo_layers)

    def __call__(self, sinr_db: np.ndarray, profile: CapabilityProfile) -> np.ndarray:
        sinr = np.clip(sinr_db, self.sinr_min_db, self.sinr_max_db)
        se = self.attenuation * np.log2(1.0 + 10.0 ** (sinr / 10.0))
        return np.minimum(se, self.cap(profile))


def _resolve(profile: ProfileKind | CapabilityProfile) -> CapabilityProfile:
    return profile if isinstance(profile, CapabilityProfile) else builtin_profile(profile)


@dataclass(frozen=True)
class CapacityScenario:
    n_cells: int = 7
    users_per_cell: int = 30
    redcap_fraction: float = 0.0
    carrier_freq_ghz: float = 2.6
    bandwidth_mhz: float = 100.0
    scheduler: Scheduler = Scheduler.RoundRobin
    redcap_rx_penalty_db: float = 3.0
    sinr_to_se: SinrToSe = field(default_factory=SinrToSe)
    seed: int = 1
    drops: int = 10
    scs_khz: int = 30
    isd_m: float = 500.0
    min_distance_m: float = 35.0
    tx_power_dbm: float = 46.0
    bs_gain_dbi: float = 15.0
    ue_noise_figure_db: float = 9.0
    shadowing_db: float = 6.0
    shadowing_site_correlation: float = 0.5
    overhead_fraction: float = 0.14
    horizon_s: float = 4.0
    tail_exclusion_s: float = 0.5
    pf_window_tti: float = 100.0
    embb_traffic: TrafficModel = EMBB_TRAFFIC
    redcap_traffic: TrafficModel = REDCAP_TRAFFIC
    # a preset name or a full profile
    embb_profile: ProfileKind | CapabilityProfile = ProfileKind.ReferenceNrFr1
    redcap_profile: ProfileKind | CapabilityProfile = ProfileKind.RedCapBaselineFr1
    load_points: tuple[float, ...] = (0.0, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheduler", Scheduler(self.scheduler))
        for name in ("embb_profile", "redcap_profile"):
            value = getattr(self, name)
            if not isinstance(value, CapabilityProfile):
                object.__setattr__(self, name, ProfileKind(value))
        if self.embb.is_redcap or not self.redcap.is_redcap:
            raise ValueError("embb_profile must be a non-RedCap profile and redcap_profile a "
                             "RedCap one")
        object.__setattr__(self, "load_points", tuple(self.load_points))
        if self.drops < 1:
            raise ValueError("drops must be ≥ 1")
        if self.users_per_cell < 1:
            raise ValueError("users_per_cell must be ≥ 1")
        if self.n_cells < 1:
            raise ValueError("n_cells must be ≥ 1")
        if not self.bandwidth_mhz > 0:
            raise ValueError("bandwidth_mhz must be positive")
        if not 0.0 <= self.redcap_fraction < 1.0:
            raise ValueError("redcap_fraction must lie in [0, 1); a fraction of 1 leaves no "
                             "eMBB users to measure")
        if not 0.0 <= self.shadowing_site_correlation <= 1.0:
            raise ValueError("shadowing_site_correlation must lie in [0, 1]")
        if not 0.0 <= self.overhead_fraction < 1.0:
            raise ValueError("overhead_fraction must lie in [0, 1)")
        if self.horizon_s <= self.tail_exclusion_s or self.tail_exclusion_s < 0:
            raise ValueError("horizon_s must exceed tail_exclusion_s ≥ 0")
        if not self.load_points or any(not 0.0 <= x <= 1.0 for x in self.load_points):
            raise ValueError("load_points must be fractions in [0, 1]")
        n_prb_for(FrequencyRange.FR1, self.scs_khz, self.bandwidth_mhz)

    @property
    def n_prb(self) -> int:
        return n_prb_for(FrequencyRange.FR1, self.scs_khz, self.bandwidth_mhz)

    @property
    def embb(self) -> CapabilityProfile:
        return _resolve(self.embb_profile)

    @property
    def redcap(self) -> CapabilityProfile:
        return _resolve(self.redcap_profile)

    @property
    def tti_s(self) -> float:
        return 1e-3 * 15 / self.scs_khz

    @property
    def n_tti(self) -> int:
        return int(round(self.horizon_s / self.tti_s))


@dataclass(frozen=True)
class ThroughputReport:
    redcap_fraction: float
    n_embb_per_cell: int
    n_redcap_per_cell: int
    offered_load_bps_per_cell: float
    served_load_bps_per_cell: float
    p5_mbps: float
    p50_mbps: float
    p95_mbps: float
    resource_utilization: float
    spectral_efficiency: float
    n_files: int


def _half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def redcap_count(n_embb: int, fraction: float) -> int:
    if fraction == 0.0:
        return 0
    return _half_up(n_embb * fraction / (1.0 - fraction))


def load_grid(scn: CapacityScenario) -> list[tuple[int, int]]:
    """``(n_embb, n_redcap)`` per cell for each load point, ascending."""
    top = 1
    while top + 1 + redcap_count(top + 1, scn.redcap_fraction) <= scn.users_per_cell:
        top += 1
    points = sorted({max(1, _half_up(x * top)) for x in scn.load_points})
    return [(n, redcap_count(n, scn.redcap_fraction)) for n in points]


# ---------------------------------------------------------------------------
# Geometry and radio


def hex_sites(n: int, isd_m: float) -> np.ndarray:
    """Site coordinates: centre, then successive hexagonal rings."""
    axial = [(0, 0)]
    ring = 1
    dirs = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)]
    while len(axial) < n:
        q, r = -ring, ring
        for dq, dr in dirs:
            for _ in range(ring):
                axial.append((q, r))
                q, r = q + dq, r + dr
        ring += 1
    axial = np.array(axial[:n], dtype=float)
    x = isd_m * (axial[:, 0] + axial[:, 1] / 2.0)
    y = isd_m * (math.sqrt(3) / 2.0) * axial[:, 1]
    return np.column_stack([x, y])


def hexagon_points(u0: np.ndarray, u1: np.ndarray, isd_m: float) -> np.ndarray:
    """Map two uniforms to uniform points in the cell hexagon (pointy-top, centred at 0).

    ``u0`` picks one of the six triangles around the centre and the position
    along its outer edge; ``sqrt(u1)`` sets the radial fraction.
    """
    circum = isd_m / math.sqrt(3)
    k = np.minimum(np.floor(6.0 * u0), 5.0)
    t = 6.0 * u0 - k
    a0 = np.radians(30.0 + 60.0 * k)
    a1 = a0 + np.radians(60.0)
    r = np.sqrt(u1) * circum
    x = r * ((1.0 - t) * np.cos(a0) + t * np.cos(a1))
    y = r * ((1.0 - t) * np.sin(a0) + t * np.sin(a1))
    return np.stack([x, y], axis=-1)


def path_loss_db(d_m: np.ndarray, fc_ghz: float) -> np.ndarray:
    return 13.54 + 39.08 * np.log10(d_m) + 20.0 * np.log10(fc_ghz)


def sinr_db(scn: CapacityScenario, sites: np.ndarray, cell: int, pos: np.ndarray,
            shadow: np.ndarray) -> np.ndarray:
    """Per-user SINR in dB; ``shadow`` holds one shadowing value per user per site."""
    d = np.hypot(pos[:, None, 0] - sites[None, :, 0], pos[:, None, 1] - sites[None, :, 1])
    d = np.maximum(d, scn.min_distance_m)
    rx_dbm = scn.tx_power_dbm + scn.bs_gain_dbi - path_loss_db(d, scn.carrier_freq_ghz) - shadow
    rx_mw = 10.0 ** (rx_dbm / 10.0)
    noise_mw = 10.0 ** ((-174.0 + 10.0 * math.log10(scn.bandwidth_mhz * 1e6)
                         + scn.ue_noise_figure_db) / 10.0)
    signal = rx_mw[:, cell]
    interference = rx_mw.sum(axis=1) - signal
    return 10.0 * np.log10(signal / (interference + noise_mw))


# ---------------------------------------------------------------------------
# Simulation


@dataclass
class _Pool:
    pos: np.ndarray        # (drops, cells, users, 2), relative to the serving site
    shadow: np.ndarray     # (drops, cells, users, sites) in dB
    phase: np.ndarray      # (drops, cells, users) first-arrival offset in [0, 1) periods


def _draw_pool(scn: CapacityScenario, size: int, stream: int) -> _Pool:
    """Users of one class for every drop.

    User ``i`` of every cell and drop comes from one Latin-hypercube layer
    of ``cells * drops`` points, so any prefix of users is a union of
    stratified layers. Low load points then rest on an evenly spread
    population instead of a handful of random draws. Layers are drawn in
    order, so layer ``i`` does not depend on ``size``.
    """
    n_c, n_d = scn.n_cells, scn.drops
    dim = 4 + n_c
    rng = np.random.default_rng([scn.seed, stream])
    layers = [qmc.LatinHypercube(dim, seed=rng).random(n_c * n_d) for _ in range(size)]
    u = np.stack(layers).reshape(size, n_d, n_c, dim).transpose(1, 2, 0, 3)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    rho = scn.shadowing_site_correlation
    z = ndtri(u[..., 3:3 + n_c])
    shadow = scn.shadowing_db * (math.sqrt(rho) * ndtri(u[..., 2:3]) + math.sqrt(1.0 - rho) * z)
    return _Pool(hexagon_points(u[..., 0], u[..., 1], scn.isd_m), shadow, u[..., 3 + n_c])


def _files(phase: np.ndarray, traffic: TrafficModel, scn: CapacityScenario):
    """Arrival times (s) of each user's files within the horizon."""
    out = []
    for ph in phase:
        t = ph * traffic.period_s + traffic.period_s * np.arange(
            int(math.ceil(scn.horizon_s / traffic.period_s)) + 1)
        out.append(t[t < scn.horizon_s])
    return out


def groups_at(pool: int, n: int) -> int:
    """Cell realizations needed so that every pool user is measured once."""
    return -(-pool // n)


def redcap_pool_size(scn: CapacityScenario, grid: Sequence[tuple[int, int]]) -> int:
    return max(1, max(groups_at(scn.users_per_cell, n_e) * n_r for n_e, n_r in grid))


def _simulate_drop(scn: CapacityScenario, drop: int, grid: Sequence[tuple[int, int]],
                   embb: CapabilityProfile, redcap: CapabilityProfile,
                   pools: tuple[_Pool, _Pool]):
    """Per load point: eMBB file throughputs (bit/s), served bits, used PRBs, realizations.

    At ``n_e`` eMBB users per cell the eMBB pool of each cell is split into
    consecutive groups of ``n_e``, each simulated as its own realization of
    the cell with its own ``n_r`` RedCap users. The last group wraps around
    to the start of the pool; wrapped users only add load and are not
    measured twice. Every load point thus measures the same eMBB users.
    """
    sites = hex_sites(scn.n_cells, scn.isd_m)
    pool_e, pool_r = (_Pool(p.pos[drop], p.shadow[drop], p.phase[drop]) for p in pools)
    size_e = pool_e.phase.shape[1]
    n_prb = scn.n_prb
    redcap_prb = min(n_prb, max_prb_within(FrequencyRange.FR1, scn.scs_khz,
                                           redcap.max_bandwidth_mhz))
    re_per_prb = 12 * 14 * (1.0 - scn.overhead_fraction)
    sched = kernels.PF if scn.scheduler is Scheduler.ProportionalFair else kernels.RR
    tail = scn.horizon_s - scn.tail_exclusion_s
    embb_bits = scn.embb_traffic.payload_bytes * 8.0
    redcap_bits = scn.redcap_traffic.payload_bytes * 8.0

    # per-cell per-user bits per PRB, computed once for the whole pool
    bpp_e, bpp_r = [], []
    for c in range(scn.n_cells):
        s_e = sinr_db(scn, sites, c, pool_e.pos[c] + sites[c], pool_e.shadow[c])
        s_r = sinr_db(scn, sites, c, pool_r.pos[c] + sites[c], pool_r.shadow[c])
        s_r = s_r - scn.redcap_rx_penalty_db
        bpp_e.append(re_per_prb * scn.sinr_to_se(s_e, embb))
        bpp_r.append(re_per_prb * scn.sinr_to_se(s_r, redcap))
    files_e = [_files(pool_e.phase[c], scn.embb_traffic, scn) for c in range(scn.n_cells)]
    files_r = [_files(pool_r.phase[c], scn.redcap_traffic, scn) for c in range(scn.n_cells)]

    results = []
    for n_e, n_r in grid:
        tputs = []
        served_total = 0.0
        used_total = 0
        groups = groups_at(size_e, n_e)
        for c in range(scn.n_cells):
            for g in range(groups):
                ids_e = [(g * n_e + j) % size_e for j in range(n_e)]
                measured = sum(g * n_e + j < size_e for j in range(n_e))
                ids_r = list(range(g * n_r, (g + 1) * n_r))
                bpp = np.concatenate([bpp_e[c][ids_e], bpp_r[c][ids_r]])
                max_prb = np.array([n_prb] * n_e + [redcap_prb] * n_r, dtype=np.int64)
                arrivals = [files_e[c][u] for u in ids_e] + [files_r[c][u] for u in ids_r]
                counts = [len(a) for a in arrivals]
                start = np.zeros(n_e + n_r + 1, dtype=np.int64)
                start[1:] = np.cumsum(counts)
                arr_s = np.concatenate(arrivals)
                # a file is first schedulable at the next TTI boundary
                arr = np.ceil(arr_s / scn.tti_s - 1e-9).astype(np.int64)
                fbits = np.repeat([embb_bits] * n_e + [redcap_bits] * n_r, counts)
                completion, served, used = kernels.simulate_cell(
                    bpp, max_prb, start, arr, fbits, n_prb, scn.n_tti, sched,
                    scn.pf_window_tti)
                served_total += float(served.sum())
                used_total += int(used)
                k = int(start[measured])
                a_s = arr_s[:k]
                done = completion[:k] >= 0
                dur = np.where(done, (completion[:k] + 1) * scn.tti_s - a_s, scn.horizon_s - a_s)
                tp = served[:k] / dur
                tputs.append(tp[a_s < tail])
        results.append((np.concatenate(tputs), served_total, used_total, groups * scn.n_cells))
    return results


def run_capacity_sim(scn: CapacityScenario,
                     points: Optional[Sequence[tuple[int, int]]] = None) -> list[ThroughputReport]:
    """One report per load point, ascending in load.

    ``points`` overrides the load grid with explicit ``(n_embb, n_redcap)``
    pairs per cell; each needs ``n_embb`` between 1 and ``users_per_cell``.
    """
    embb = scn.embb
    redcap = scn.redcap
    if points is None:
        grid = load_grid(scn)
    else:
        grid = [(int(e), int(r)) for e, r in points]
        if not grid or any(not 1 <= e <= scn.users_per_cell or r < 0 for e, r in grid):
            raise ValueError("each load point needs 1 <= n_embb <= users_per_cell and n_redcap >= 0")
    pools = (_draw_pool(scn, scn.users_per_cell, 0),
             _draw_pool(scn, redcap_pool_size(scn, grid), 1))
    per_drop = [_simulate_drop(scn, d, grid, embb, redcap, pools) for d in range(scn.drops)]
    hz_s_per_prb = 12 * scn.scs_khz * 1e3 * scn.tti_s
    reports = []
    for i, (n_e, n_r) in enumerate(grid):
        # sorted merge keeps percentiles independent of drop order
        tp = np.sort(np.concatenate([per_drop[d][i][0] for d in range(scn.drops)]))
        served = sum(per_drop[d][i][1] for d in range(scn.drops))
        used = sum(per_drop[d][i][2] for d in range(scn.drops))
        cells = sum(per_drop[d][i][3] for d in range(scn.drops))
        p5, p50, p95 = (np.percentile(tp, [5, 50, 95]) / 1e6) if len(tp) else (math.nan,) * 3
        offered = offered_load([(embb, scn.embb_traffic)] * n_e
                               + [(redcap, scn.redcap_traffic)] * n_r)
        reports.append(ThroughputReport(
            redcap_fraction=scn.redcap_fraction,
            n_embb_per_cell=n_e,
            n_redcap_per_cell=n_r,
            offered_load_bps_per_cell=offered,
            served_load_bps_per_cell=served / (cells * scn.horizon_s),
            p5_mbps=float(p5), p50_mbps=float(p50), p95_mbps=float(p95),
            resource_utilization=used / (scn.n_prb * scn.n_tti * cells),
            spectral_efficiency=(served / (used * hz_s_per_prb)) if used else 0.0,
            n_files=int(len(tp)),
        ))
    return reports


REPORT_COLUMNS = ("load_bps", "p5", "p50", "p95", "utilization")


def report_rows(reports: Sequence[ThroughputReport]) -> list[dict]:
    """Rows for the per-fraction CSV: load in bit/s per cell, throughput in Mbps."""
    return [{"load_bps": r.served_load_bps_per_cell, "p5": r.p5_mbps, "p50": r.p50_mbps,
             "p95": r.p95_mbps, "utilization": r.resource_utilization} for r in reports]
