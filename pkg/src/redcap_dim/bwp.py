"""PRB-grid carrier model, BWP layout validation, PUSCH fragmentation and
RedCap initial-BWP placement.

PRB ranges are inclusive on both ends: ``PrbRange(0, 2)`` spans 3 PRBs.
Fragmentation is measured on the UL grid of the whole carrier: regular NR
PUCCH sits at the carrier edges and RedCap PUCCH sits at the edges of the
RedCap UL BWP (both edges when hopping, the outer edge otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .model import (CapabilityProfile, CarrierConfig, Direction, Duplex, FrequencyRange,
                    max_prb_within)

DEFAULT_PUCCH_PRBS = 2
SSB_PRBS = 20
CORESET0_PRBS = 48


class LayoutError(ValueError):
    """Malformed PRB ranges or inconsistent layout input."""


class InfeasibleLayoutError(ValueError):
    def __init__(self, binding: dict[str, list[str]]):
        self.binding = binding
        rules = ", ".join(sorted(binding))
        super().__init__(f"no RedCap BWP placement satisfies the layout rules (binding: {rules})")


class Owner(str, Enum):
    RegularNr = "RegularNr"
    RedCap = "RedCap"


class PucchHopping(str, Enum):
    EnabledEdgeHopping = "EnabledEdgeHopping"
    Disabled = "Disabled"


class Rule(str, Enum):
    WIDTH = "a-width-exceeds-capability"
    CENTER = "b-tdd-center-mismatch"
    SSB = "c-dl-bwp-without-ssb-coreset0"
    HOPPING = "d-pucch-hopping-disabled"
    SEPARATE = "e-separate-bwp-not-configured"


@dataclass(frozen=True, order=True)
class PrbRange:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if int(self.lo) != self.lo or int(self.hi) != self.hi:
            raise LayoutError(f"PRB range bounds must be integers, got [{self.lo}, {self.hi}]")
        if self.lo < 0 or self.hi < self.lo:
            raise LayoutError(f"malformed PRB range [{self.lo}, {self.hi}]")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    @property
    def center2(self) -> int:
        # twice the center, kept integral
        return self.lo + self.hi

    def contains(self, other: "PrbRange") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def as_list(self) -> list[int]:
        return [self.lo, self.hi]


def prb_range(value) -> PrbRange:
    if isinstance(value, PrbRange):
        return value
    lo, hi = value
    return PrbRange(lo, hi)


@dataclass(frozen=True)
class Release17Features:
    separate_initial_bwp: bool = False
    hopping_disable_allowed: bool = False
    dl_bwp_without_ssb_allowed: bool = False

    @classmethod
    def all(cls) -> "Release17Features":
        return cls(True, True, True)

    @classmethod
    def pre_r17(cls) -> "Release17Features":
        """Separate RedCap BWPs exist, but neither hopping nor SSB relaxation."""
        return cls(separate_initial_bwp=True)

    def covers(self, other: "Release17Features") -> bool:
        return all(getattr(self, f) or not getattr(other, f)
                   for f in ("separate_initial_bwp", "hopping_disable_allowed",
                             "dl_bwp_without_ssb_allowed"))


@dataclass(frozen=True)
class CarrierLayout:
    n_prb: int
    ssb_prb_range: PrbRange
    coreset0_prb_range: PrbRange
    duplex_mode: Duplex
    scs_khz: int = 30
    frequency_range: FrequencyRange = FrequencyRange.FR1

    def __post_init__(self) -> None:
        object.__setattr__(self, "ssb_prb_range", prb_range(self.ssb_prb_range))
        object.__setattr__(self, "coreset0_prb_range", prb_range(self.coreset0_prb_range))
        object.__setattr__(self, "duplex_mode", Duplex(self.duplex_mode))
        object.__setattr__(self, "frequency_range", FrequencyRange(self.frequency_range))
        if self.n_prb < 1:
            raise LayoutError("n_prb must be positive")
        for name in ("ssb_prb_range", "coreset0_prb_range"):
            if getattr(self, name).hi >= self.n_prb:
                raise LayoutError(f"{name} {getattr(self, name).as_list()} outside the "
                                  f"{self.n_prb}-PRB carrier")

    @property
    def full(self) -> PrbRange:
        return PrbRange(0, self.n_prb - 1)

    @property
    def anchor(self) -> PrbRange:
        """Smallest range covering both SSB and CORESET#0."""
        return PrbRange(min(self.ssb_prb_range.lo, self.coreset0_prb_range.lo),
                        max(self.ssb_prb_range.hi, self.coreset0_prb_range.hi))

    def check(self, r: PrbRange, what: str = "range") -> None:
        if r.hi >= self.n_prb:
            raise LayoutError(f"{what} {r.as_list()} outside the {self.n_prb}-PRB carrier")

    @classmethod
    def from_carrier(cls, carrier: CarrierConfig, ssb_prbs: int = SSB_PRBS,
                     coreset0_prbs: int = CORESET0_PRBS) -> "CarrierLayout":
        """SSB and CORESET#0 centred in the carrier."""
        n = carrier.n_prb
        return cls(n, _centered(n, min(ssb_prbs, n)), _centered(n, min(coreset0_prbs, n)),
                   carrier.duplex_mode, carrier.scs_khz, carrier.frequency_range)


def _centered(n_prb: int, width: int, center2: Optional[int] = None) -> PrbRange:
    if center2 is None:
        center2 = n_prb - 1
    lo = (center2 - (width - 1)) // 2
    lo = max(0, min(lo, n_prb - width))
    return PrbRange(lo, lo + width - 1)


@dataclass(frozen=True)
class BwpConfig:
    owner: Owner
    direction: Direction
    prb_range: PrbRange
    pucch_hopping: PucchHopping = PucchHopping.EnabledEdgeHopping
    release17_features: Release17Features = field(default_factory=Release17Features)
    contains_ssb_coreset0: Optional[bool] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "owner", Owner(self.owner))
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "prb_range", prb_range(self.prb_range))
        object.__setattr__(self, "pucch_hopping", PucchHopping(self.pucch_hopping))
        if self.direction is Direction.UL and self.contains_ssb_coreset0 is not None:
            raise LayoutError("contains_ssb_coreset0 applies to DL BWPs only")


@dataclass(frozen=True)
class Violation:
    rule: Rule
    owner: Owner
    direction: Optional[Direction]
    prb_ranges: tuple[PrbRange, ...]
    detail: str


def redcap_max_prbs(carrier: CarrierLayout, profile: CapabilityProfile) -> int:
    return min(carrier.n_prb,
               max_prb_within(carrier.frequency_range, carrier.scs_khz, profile.max_bandwidth_mhz))


def validate_layout(carrier: CarrierLayout, bwps: Sequence[BwpConfig],
                    profile: CapabilityProfile) -> list[Violation]:
    if not bwps:
        raise LayoutError("validate_layout needs at least one BWP")
    for b in bwps:
        carrier.check(b.prb_range, f"{b.owner.value} {b.direction.value} BWP")
        if b.contains_ssb_coreset0 is not None \
                and b.contains_ssb_coreset0 != b.prb_range.contains(carrier.anchor):
            raise LayoutError(f"{b.owner.value} DL BWP {b.prb_range.as_list()} declares "
                              f"contains_ssb_coreset0={b.contains_ssb_coreset0} but the "
                              "geometry disagrees")

    out: list[Violation] = []
    cap = redcap_max_prbs(carrier, profile)
    for b in bwps:
        if b.owner is Owner.RedCap and b.prb_range.width > cap:
            out.append(Violation(Rule.WIDTH, b.owner, b.direction, (b.prb_range,),
                                 f"{b.prb_range.width} PRBs exceed the device's {cap}"))

    if carrier.duplex_mode is Duplex.TDD:
        for owner in Owner:
            ul = [b for b in bwps if b.owner is owner and b.direction is Direction.UL]
            dl = [b for b in bwps if b.owner is owner and b.direction is Direction.DL]
            for u in ul:
                for d in dl:
                    if u.prb_range.center2 != d.prb_range.center2:
                        out.append(Violation(
                            Rule.CENTER, owner, None, (u.prb_range, d.prb_range),
                            f"UL centre {u.prb_range.center2 / 2:g} != DL centre "
                            f"{d.prb_range.center2 / 2:g}"))

    for b in bwps:
        if b.direction is not Direction.DL or b.prb_range.contains(carrier.anchor):
            continue
        allowed = b.owner is Owner.RedCap and b.release17_features.dl_bwp_without_ssb_allowed
        if not allowed:
            out.append(Violation(Rule.SSB, b.owner, b.direction, (b.prb_range, carrier.anchor),
                                 "DL BWP does not contain SSB and CORESET#0"))

    for b in bwps:
        if b.direction is not Direction.UL or b.pucch_hopping is not PucchHopping.Disabled:
            continue
        allowed = b.owner is Owner.RedCap and b.release17_features.hopping_disable_allowed
        if not allowed:
            out.append(Violation(Rule.HOPPING, b.owner, b.direction, (b.prb_range,),
                                 "PUCCH hopping disabled on an initial UL BWP"))

    for b in bwps:
        if b.owner is not Owner.RedCap or b.release17_features.separate_initial_bwp:
            continue
        shared = [r.prb_range for r in bwps
                  if r.owner is Owner.RegularNr and r.direction is b.direction] or [carrier.full]
        if b.prb_range not in shared:
            out.append(Violation(Rule.SEPARATE, b.owner, b.direction, (b.prb_range,),
                                 "RedCap BWP differs from the shared initial BWP"))
    return out


# ---------------------------------------------------------------------------
# Fragmentation


@dataclass(frozen=True)
class FragReport:
    largest_contiguous_prbs: int
    free_prbs_total: int
    fragmentation_ratio: float


def occupancy(n_prb: int, blocks: Iterable[PrbRange]) -> np.ndarray:
    grid = np.zeros(n_prb, dtype=np.uint8)
    for b in blocks:
        grid[b.lo:b.hi + 1] = 1
    return grid


def pusch_fragmentation(carrier: CarrierLayout, pucch_blocks: Iterable) -> FragReport:
    blocks = [prb_range(b) for b in pucch_blocks]
    for b in blocks:
        carrier.check(b, "PUCCH block")
    largest, free = kernels.max_free_run(occupancy(carrier.n_prb, blocks))
    ratio = 0.0 if free == 0 else 1.0 - largest / free
    return FragReport(int(largest), int(free), ratio)


def pucch_blocks(carrier: CarrierLayout, bwps: Sequence[BwpConfig],
                 pucch_prbs: int = DEFAULT_PUCCH_PRBS) -> list[PrbRange]:
    """PUCCH regions implied by the UL BWPs of a layout."""
    blocks = []
    for b in bwps:
        if b.direction is not Direction.UL:
            continue
        r = b.prb_range
        w = min(pucch_prbs, r.width)
        low = PrbRange(r.lo, r.lo + w - 1)
        high = PrbRange(r.hi - w + 1, r.hi)
        if b.pucch_hopping is PucchHopping.EnabledEdgeHopping:
            blocks += [low, high]
        elif r.lo <= carrier.n_prb - 1 - r.hi:
            blocks.append(low)
        else:
            blocks.append(high)
    return blocks


def regular_nr_bwps(carrier: CarrierLayout) -> list[BwpConfig]:
    """The typical regular NR initial BWPs: full-carrier UL with edge hopping."""
    return [BwpConfig(Owner.RegularNr, Direction.UL, carrier.full),
            BwpConfig(Owner.RegularNr, Direction.DL, carrier.full, contains_ssb_coreset0=True)]


# ---------------------------------------------------------------------------
# Planner


@dataclass(frozen=True)
class BwpPlan:
    ul: BwpConfig
    dl: BwpConfig
    fragmentation: FragReport
    placement: tuple[str, str]


def _candidates(carrier: CarrierLayout, width: int) -> dict[str, PrbRange]:
    n = carrier.n_prb
    return {
        "lower-edge": PrbRange(0, width - 1),
        "upper-edge": PrbRange(n - width, n - 1),
        "ssb-centred": _centered(n, width, carrier.anchor.center2),
    }


def plan_redcap_bwp(carrier: CarrierLayout, profile: CapabilityProfile,
                    features: Release17Features,
                    pucch_prbs: int = DEFAULT_PUCCH_PRBS,
                    regular: Optional[Sequence[BwpConfig]] = None) -> BwpPlan:
    """Lowest-fragmentation RedCap UL/DL initial BWP pair that passes validation.

    Candidates are the lower edge, the upper edge and the SSB-centred
    position, at the device's maximum width and also at the full carrier when
    sharing the regular BWP is the only option. Ties prefer hopping disabled,
    then the lower UL start, then the lower DL start.
    """
    if not profile.is_redcap:
        raise ValueError("plan_redcap_bwp needs a RedCap profile")
    regular = list(regular_nr_bwps(carrier) if regular is None else regular)
    width = redcap_max_prbs(carrier, profile)
    cands = _candidates(carrier, width)
    if not features.separate_initial_bwp:
        cands["shared"] = carrier.full

    best = None
    binding: dict[str, list[str]] = {}
    for ul_name, ul_r in cands.items():
        for dl_name, dl_r in cands.items():
            for hop in PucchHopping:
                ul = BwpConfig(Owner.RedCap, Direction.UL, ul_r, hop, features)
                dl = BwpConfig(Owner.RedCap, Direction.DL, dl_r, release17_features=features,
                               contains_ssb_coreset0=dl_r.contains(carrier.anchor))
                layout = regular + [ul, dl]
                violations = validate_layout(carrier, layout, profile)
                if violations:
                    for v in violations:
                        binding.setdefault(v.rule.value, []).append(
                            f"UL {ul_name} / DL {dl_name} / {hop.value}")
                    continue
                frag = pusch_fragmentation(carrier, pucch_blocks(carrier, layout, pucch_prbs))
                key = (frag.fragmentation_ratio, hop is PucchHopping.EnabledEdgeHopping,
                       ul_r.lo, dl_r.lo)
                if best is None or key < best[0]:
                    best = (key, BwpPlan(ul, dl, frag, (ul_name, dl_name)))
    if best is None:
        raise InfeasibleLayoutError(binding)
    return best[1]


# ---------------------------------------------------------------------------
# Rendering


def render_grid(carrier: CarrierLayout, bwps: Sequence[BwpConfig],
                pucch_prbs: int = DEFAULT_PUCCH_PRBS, columns: int = 96) -> str:
    """ASCII view of the PRB grid, one row per element, ``columns`` characters wide."""
    per_col = max(1, -(-carrier.n_prb // columns))
    ncol = -(-carrier.n_prb // per_col)

    def row(label: str, ranges: Iterable[PrbRange], mark: str) -> str:
        cells = [" "] * ncol
        for r in ranges:
            for c in range(r.lo // per_col, r.hi // per_col + 1):
                cells[c] = mark
        return f"{label:<14}|{''.join(cells)}|"

    lines = [f"PRB grid: {carrier.n_prb} PRBs, {per_col} PRB per column"]
    lines.append(row("SSB", [carrier.ssb_prb_range], "S"))
    lines.append(row("CORESET#0", [carrier.coreset0_prb_range], "C"))
    for b in bwps:
        mark = "=" if b.owner is Owner.RegularNr else "#"
        label = f"{'NR' if b.owner is Owner.RegularNr else 'RedCap'} {b.direction.value}"
        lines.append(row(label, [b.prb_range], mark))
    lines.append(row("PUCCH", pucch_blocks(carrier, bwps, pucch_prbs), "P"))
    return "\n".join(lines)


def plan_layout(plan: BwpPlan, carrier: CarrierLayout) -> list[BwpConfig]:
    return regular_nr_bwps(carrier) + [plan.ul, plan.dl]

