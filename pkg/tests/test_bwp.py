import itertools
import random

import pytest
from hypothesis import given, strategies as st

from redcap_dim.bwp import (
    BwpConfig, CarrierLayout, InfeasibleLayoutError, LayoutError, Owner, PrbRange,
    PucchHopping, Release17Features, Rule, plan_layout, plan_redcap_bwp, pucch_blocks,
    pusch_fragmentation, regular_nr_bwps, render_grid, validate_layout,
)
from redcap_dim.model import CarrierConfig, builtin_profile

REDCAP = builtin_profile("RedCapBaselineFr1")
REDCAP_FR2 = builtin_profile("RedCapBaselineFr2")
TDD100 = CarrierLayout.from_carrier(CarrierConfig(30, 100, "TDD"))
FDD50 = CarrierLayout.from_carrier(CarrierConfig(15, 50, "FD-FDD"))
FR2_200 = CarrierLayout.from_carrier(CarrierConfig(120, 200, "TDD", frequency_range="FR2"))
ALL_FLAGS = [Release17Features(*bits) for bits in itertools.product((False, True), repeat=3)]


def plain(n_prb, duplex="TDD"):
    mid = n_prb // 2
    return CarrierLayout(n_prb, (mid - 1, mid), (mid - 2, mid + 1), duplex)


def brute_force(n_prb, blocks):
    used = [False] * n_prb
    for lo, hi in blocks:
        for i in range(lo, hi + 1):
            used[i] = True
    runs = [len(list(g)) for busy, g in itertools.groupby(used) if not busy]
    free = used.count(False)
    largest = max(runs, default=0)
    return largest, free, (0.0 if free == 0 else 1.0 - largest / free)


def random_blocks(rng, n_prb):
    out = []
    for _ in range(rng.randint(0, 8)):
        lo = rng.randrange(n_prb)
        out.append((lo, rng.randint(lo, min(n_prb - 1, lo + rng.randint(0, 12)))))
    return out


def rules(violations):
    return {v.rule for v in violations}


# fragmentation

def test_fragmentation_examples():
    c = plain(100)
    r = pusch_fragmentation(c, [(0, 2), (97, 99)])
    assert (r.largest_contiguous_prbs, r.free_prbs_total, r.fragmentation_ratio) == (94, 94, 0.0)
    r = pusch_fragmentation(c, [(48, 51)])
    assert (r.largest_contiguous_prbs, r.free_prbs_total, r.fragmentation_ratio) == (48, 96, 0.5)
    r = pusch_fragmentation(c, [])
    assert (r.largest_contiguous_prbs, r.free_prbs_total, r.fragmentation_ratio) == (100, 100, 0.0)


def test_fragmentation_fully_occupied():
    r = pusch_fragmentation(plain(10), [(0, 9)])
    assert (r.largest_contiguous_prbs, r.free_prbs_total, r.fragmentation_ratio) == (0, 0, 0.0)


def test_fragmentation_matches_brute_force_1000_cases():
    rng = random.Random(20240501)
    for _ in range(1000):
        n = rng.randint(4, 273)
        blocks = random_blocks(rng, n)
        r = pusch_fragmentation(plain(n), blocks)
        assert (r.largest_contiguous_prbs, r.free_prbs_total, r.fragmentation_ratio) \
            == brute_force(n, blocks)


def test_overlapping_blocks_are_unioned():
    r = pusch_fragmentation(plain(50), [(10, 20), (15, 25), (25, 25)])
    assert r.free_prbs_total == 50 - 16


def test_block_outside_carrier_rejected():
    with pytest.raises(LayoutError):
        pusch_fragmentation(plain(50), [(45, 50)])
    with pytest.raises(LayoutError):
        pusch_fragmentation(plain(50), [(5, 3)])


@given(st.integers(4, 273), st.randoms(use_true_random=False))
def test_removing_a_block_never_shrinks_largest_run(n, rnd):
    blocks = random_blocks(rnd, n)
    full = pusch_fragmentation(plain(n), blocks)
    assert 0.0 <= full.fragmentation_ratio <= 1.0
    for i in range(len(blocks)):
        fewer = pusch_fragmentation(plain(n), blocks[:i] + blocks[i + 1:])
        assert fewer.largest_contiguous_prbs >= full.largest_contiguous_prbs


# layout validation

def test_typical_regular_layout_is_clean():
    assert validate_layout(TDD100, regular_nr_bwps(TDD100), REDCAP) == []


def test_tdd_edge_ul_mid_dl_pre_r17():
    pre = Release17Features.pre_r17()
    ul = BwpConfig(Owner.RedCap, "UL", (0, 50), release17_features=pre)
    dl = BwpConfig(Owner.RedCap, "DL", (110, 160), release17_features=pre)
    assert rules(validate_layout(TDD100, [ul, dl], REDCAP)) == {Rule.CENTER}
    ul_nohop = BwpConfig(Owner.RedCap, "UL", (0, 50), PucchHopping.Disabled, pre)
    v = validate_layout(TDD100, [ul_nohop, dl], REDCAP)
    assert rules(v) == {Rule.CENTER, Rule.HOPPING}
    centre = next(x for x in v if x.rule is Rule.CENTER)
    assert centre.prb_ranges == (PrbRange(0, 50), PrbRange(110, 160))


def test_edge_layout_clean_with_all_features():
    f = Release17Features.all()
    ul = BwpConfig(Owner.RedCap, "UL", (0, 50), PucchHopping.Disabled, f)
    dl = BwpConfig(Owner.RedCap, "DL", (0, 50), release17_features=f)
    assert validate_layout(TDD100, regular_nr_bwps(TDD100) + [ul, dl], REDCAP) == []


def test_width_rule():
    ul = BwpConfig(Owner.RedCap, "UL", (0, 106), release17_features=Release17Features.all())
    v = validate_layout(FDD50, [ul], REDCAP)
    assert rules(v) == {Rule.WIDTH}
    assert "107 PRBs exceed the device's 106" in v[0].detail
    ok = BwpConfig(Owner.RedCap, "UL", (0, 105), release17_features=Release17Features.all())
    assert validate_layout(FDD50, [ok], REDCAP) == []
    assert validate_layout(FDD50, [BwpConfig(Owner.RegularNr, "UL", (0, 269))], REDCAP) == []


def test_ssb_rule_only_relaxed_for_redcap():
    f = Release17Features.all()
    assert rules(validate_layout(TDD100, [BwpConfig(Owner.RedCap, "DL", (0, 50))], REDCAP)) \
        == {Rule.SSB, Rule.SEPARATE}
    assert validate_layout(TDD100, [BwpConfig(Owner.RedCap, "DL", (0, 50),
                                              release17_features=f)], REDCAP) == []
    assert rules(validate_layout(TDD100, [BwpConfig(Owner.RegularNr, "DL", (0, 50),
                                                    release17_features=f)], REDCAP)) == {Rule.SSB}


def test_hopping_rule_only_relaxed_for_redcap():
    f = Release17Features.all()
    nr = BwpConfig(Owner.RegularNr, "UL", TDD100.full, PucchHopping.Disabled, f)
    assert rules(validate_layout(TDD100, [nr], REDCAP)) == {Rule.HOPPING}


def test_separate_bwp_rule():
    shared = [BwpConfig(Owner.RedCap, "UL", TDD100.full), BwpConfig(Owner.RedCap, "DL", TDD100.full)]
    assert rules(validate_layout(TDD100, regular_nr_bwps(TDD100) + shared, REDCAP)) == {Rule.WIDTH}
    own = BwpConfig(Owner.RedCap, "UL", (0, 50))
    assert Rule.SEPARATE in rules(validate_layout(TDD100, [own], REDCAP))


def test_fdd_has_no_centre_rule():
    pre = Release17Features.pre_r17()
    ul = BwpConfig(Owner.RedCap, "UL", (0, 105), release17_features=pre)
    dl = BwpConfig(Owner.RedCap, "DL", (82, 187), release17_features=pre)
    assert validate_layout(FDD50, [ul, dl], REDCAP) == []


def test_malformed_layouts():
    with pytest.raises(LayoutError):
        validate_layout(TDD100, [], REDCAP)
    with pytest.raises(LayoutError):
        validate_layout(TDD100, [BwpConfig(Owner.RedCap, "UL", (0, 273))], REDCAP)
    with pytest.raises(LayoutError):
        BwpConfig(Owner.RedCap, "UL", (10, 5))
    with pytest.raises(LayoutError):
        BwpConfig(Owner.RedCap, "UL", (0, 5), contains_ssb_coreset0=True)
    with pytest.raises(LayoutError):
        validate_layout(TDD100, [BwpConfig(Owner.RedCap, "DL", (0, 50),
                                           contains_ssb_coreset0=True)], REDCAP)
    with pytest.raises(LayoutError):
        CarrierLayout(50, (48, 50), (40, 45), "TDD")


def test_pucch_blocks_follow_hopping():
    f = Release17Features.all()
    hop = BwpConfig(Owner.RedCap, "UL", (0, 50), release17_features=f)
    edge = BwpConfig(Owner.RedCap, "UL", (0, 50), PucchHopping.Disabled, f)
    upper = BwpConfig(Owner.RedCap, "UL", (222, 272), PucchHopping.Disabled, f)
    assert pucch_blocks(TDD100, [hop]) == [PrbRange(0, 1), PrbRange(49, 50)]
    assert pucch_blocks(TDD100, [edge]) == [PrbRange(0, 1)]
    assert pucch_blocks(TDD100, [upper]) == [PrbRange(271, 272)]


# planner

def test_tdd_all_features_same_edge():
    plan = plan_redcap_bwp(TDD100, REDCAP, Release17Features.all())
    assert plan.ul.prb_range == plan.dl.prb_range == PrbRange(0, 50)
    assert plan.ul.pucch_hopping is PucchHopping.Disabled
    assert plan.fragmentation.fragmentation_ratio == 0.0
    assert validate_layout(TDD100, plan_layout(plan, TDD100), REDCAP) == []


def test_tdd_pre_r17_centres_on_ssb():
    plan = plan_redcap_bwp(TDD100, REDCAP, Release17Features.pre_r17())
    assert plan.placement == ("ssb-centred", "ssb-centred")
    assert plan.ul.pucch_hopping is PucchHopping.EnabledEdgeHopping
    assert plan.fragmentation.fragmentation_ratio == pytest.approx(1 - 110 / 265)


def test_no_features_infeasible_with_binding_rules():
    with pytest.raises(InfeasibleLayoutError) as err:
        plan_redcap_bwp(TDD100, REDCAP, Release17Features())
    assert Rule.SEPARATE.value in err.value.binding
    assert Rule.WIDTH.value in err.value.binding
    assert "binding" in str(err.value)


def test_fdd_pre_r17_edge_beats_centre():
    pre = Release17Features.pre_r17()
    plan = plan_redcap_bwp(FDD50, REDCAP, pre)
    assert plan.ul.prb_range.lo == 0
    assert plan.ul.pucch_hopping is PucchHopping.EnabledEdgeHopping
    centre_ul = BwpConfig(Owner.RedCap, "UL", (82, 187), release17_features=pre)
    layout = regular_nr_bwps(FDD50) + [centre_ul, plan.dl]
    assert validate_layout(FDD50, layout, REDCAP) == []
    centre = pusch_fragmentation(FDD50, pucch_blocks(FDD50, layout))
    assert plan.fragmentation.fragmentation_ratio < centre.fragmentation_ratio


def test_fr2_edge_plan():
    plan = plan_redcap_bwp(FR2_200, REDCAP_FR2, Release17Features.all())
    assert plan.ul.prb_range == PrbRange(0, 65)
    assert plan.fragmentation.fragmentation_ratio == 0.0


def test_planner_rejects_non_redcap():
    with pytest.raises(ValueError):
        plan_redcap_bwp(TDD100, builtin_profile("ReferenceNrFr1"), Release17Features.all())


@st.composite
def layouts(draw):
    scs = draw(st.sampled_from([15, 30]))
    bw = draw(st.sampled_from([10, 20, 40, 50] + ([100] if scs == 30 else [])))
    dup = draw(st.sampled_from(["TDD", "FD-FDD"]))
    return CarrierLayout.from_carrier(CarrierConfig(scs, bw, dup),
                                      ssb_prbs=draw(st.integers(1, 20)),
                                      coreset0_prbs=draw(st.sampled_from([24, 48])))


def _opt(carrier, flags, pucch):
    try:
        return plan_redcap_bwp(carrier, REDCAP, flags, pucch)
    except InfeasibleLayoutError:
        return None


@given(layouts(), st.sampled_from(ALL_FLAGS), st.integers(1, 4))
def test_planner_output_validates_or_is_infeasible(carrier, flags, pucch):
    plan = _opt(carrier, flags, pucch)
    if plan is not None:
        assert validate_layout(carrier, plan_layout(plan, carrier), REDCAP) == []
        blocks = pucch_blocks(carrier, plan_layout(plan, carrier), pucch)
        assert plan.fragmentation == pusch_fragmentation(carrier, blocks)


@given(layouts(), st.integers(1, 4))
def test_r17_flags_never_worsen_optimum(carrier, pucch):
    results = {f: _opt(carrier, f, pucch) for f in ALL_FLAGS}
    for a, b in itertools.product(ALL_FLAGS, repeat=2):
        if a != b and b.covers(a) and results[a] is not None:
            assert results[b] is not None
            assert (results[b].fragmentation.fragmentation_ratio
                    <= results[a].fragmentation.fragmentation_ratio)


def test_render_grid():
    plan = plan_redcap_bwp(TDD100, REDCAP, Release17Features.all())
    text = render_grid(TDD100, plan_layout(plan, TDD100))
    lines = text.splitlines()
    assert lines[0] == "PRB grid: 273 PRBs, 3 PRB per column"
    assert [l.split("|")[0].strip() for l in lines[1:]] == [
        "SSB", "CORESET#0", "NR UL", "NR DL", "RedCap UL", "RedCap DL", "PUCCH"]
    assert all(len(l) == len(lines[1]) for l in lines[1:])
    assert lines[5].split("|")[1].startswith("#" * 17)
