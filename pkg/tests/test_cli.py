import csv
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from redcap_dim.cli import fmt_number, round6, run

GOLDEN = Path(__file__).parent / "golden"
REGEN = bool(os.environ.get("REDCAP_DIM_REGEN_GOLDEN"))


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def ok(*argv):
    code, out, err = cli(*argv)
    assert code == 0, err
    assert err == ""
    return out


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def error_doc(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


# formatting

def test_six_significant_digits():
    assert fmt_number(85.0712345) == "85.0712"
    assert fmt_number(2e7) == "2e+07"
    assert fmt_number(0.000123456789) == "0.000123457"
    assert fmt_number(3) == "3"
    assert round6({"a": [1.23456789, float("inf")], "b": True}) == {"a": [1.23457, "inf"], "b": True}


# subcommands

def test_datarate(fr1_path):
    r = rows(ok("datarate", "--scenario", fr1_path, "--profile", "redcap"))
    assert {(x["carrier"], x["direction"]) for x in r} == {
        (c, d) for c in ("fdd-15k-20m", "tdd-30k-20m", "tdd-30k-100m") for d in ("DL", "UL")}
    tdd = {x["direction"]: x for x in r if x["carrier"] == "tdd-30k-20m"}
    assert float(tdd["DL"]["rate_mbps"]) == pytest.approx(60, rel=0.15)
    assert float(tdd["UL"]["rate_mbps"]) == pytest.approx(20, rel=0.15)
    wide = [x for x in r if x["carrier"] == "tdd-30k-100m"]
    assert all(x["status"].startswith("exceeds:") for x in wide)


def test_battery_grid_rows(fr1_path):
    text = ok("battery", "--scenario", fr1_path, "--cycles", "2.56,61.44,655.36")
    r = rows(text)
    assert len(r) == 9
    assert text.splitlines()[0] == "cycle_s,iat_s,lifetime_h,lifetime_ratio_vs_baseline"
    assert all(float(x["lifetime_ratio_vs_baseline"]) == 1.0 for x in r if x["cycle_s"] == "2.56")


def test_battery_json(fr1_path):
    data = json.loads(ok("battery", "--scenario", fr1_path, "--format", "JSON",
                         "--cycles", "2.56,120", "--iats", "3600"))
    assert [d["cycle_s"] for d in data] == [2.56, 120]
    assert 10 <= data[1]["lifetime_ratio_vs_baseline"] <= 70


def test_linkbudget_fr1(fr1_path):
    r = rows(ok("linkbudget", "--scenario", fr1_path))
    assert [x["channel"] for x in r if x["needs_recovery"] == "true"] == ["Msg2_PDSCH"]
    r2 = rows(ok("linkbudget", "--scenario", fr1_path, "--profile", "redcap-2rx"))
    assert all(x["needs_recovery"] == "false" for x in r2)


def test_linkbudget_fr2_trp(fr2_path):
    r = rows(ok("linkbudget", "--scenario", fr2_path, "--trp", "23"))
    assert {x["channel"] for x in r if x["needs_recovery"] == "true"} == {
        "Msg2_PDSCH", "Msg4_PDSCH", "PDSCH"}
    r = rows(ok("linkbudget", "--scenario", fr2_path, "--trp", "12"))
    assert all(x["needs_recovery"] == "false" for x in r)


def test_linkbudget_efficiency_toggle(fr1_path):
    plain = rows(ok("linkbudget", "--scenario", fr1_path))
    pen = rows(ok("linkbudget", "--scenario", fr1_path, "--efficiency-penalty"))
    for a, b in zip(plain, pen):
        assert float(b["mil_db"]) == pytest.approx(float(a["mil_db"]) - 3.0, abs=1e-3)


def test_bwp(fr1_path, tmp_path):
    ok("bwp", "--scenario", fr1_path, "--out", tmp_path)
    plan = json.loads((tmp_path / "bwp.json").read_text())
    assert plan["ul"]["prb_range"] == [0, 50]
    assert plan["ul"]["pucch_hopping"] == "Disabled"
    assert plan["fragmentation"]["fragmentation_ratio"] == 0
    assert (tmp_path / "bwp_grid.txt").read_text().startswith("PRB grid: 273 PRBs")


def test_bwp_infeasible_reports_binding_rules(fr1_path):
    code, out, err = cli("bwp", "--scenario", fr1_path, "--no-separate-initial-bwp",
                         "--no-hopping-disable-allowed", "--no-dl-bwp-without-ssb-allowed")
    assert code == 1 and out == ""
    doc = error_doc(err)
    assert doc["subcommand"] == "bwp"
    assert "e-separate-bwp-not-configured" in doc["binding_rules"]


def test_access_sim(fr1_path, tmp_path):
    ok("access-sim", "--scenario", fr1_path, "--out", tmp_path, "--id-method", "MsgA")
    data = json.loads((tmp_path / "access_outcomes.json").read_text())
    assert len(data["outcomes"]) == 200
    agg = rows((tmp_path / "access_aggregate.csv").read_text())[0]
    assert int(agg["identified_Msg3"]) == 200


def test_access_barred(fr1_path, tmp_path):
    ok("access-sim", "--scenario", fr1_path, "--out", tmp_path, "--barred")
    agg = rows((tmp_path / "access_aggregate.csv").read_text())[0]
    assert agg["total_prbs_redcap"] == "0" and int(agg["n_barred"]) == 100


def test_capacity_sim_small(fr1_path, tmp_path):
    ok("capacity-sim", "--scenario", fr1_path, "--out", tmp_path, "--drops", "1",
       "--fractions", "0,0.9", "--scheduler", "ProportionalFair")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["capacity_f0.9.csv", "capacity_f0.csv"]
    r = rows((tmp_path / "capacity_f0.csv").read_text())
    assert list(r[0]) == ["load_bps", "p5", "p50", "p95", "utilization"]
    assert all(float(x["p5"]) <= float(x["p50"]) <= float(x["p95"]) for x in r)


def test_report(fr1_path, tmp_path):
    ok("report", "--scenario", fr1_path, "--out", tmp_path, "--no-capacity")
    rep = json.loads((tmp_path / "report.json").read_text())
    assert {"datarate", "lifetime", "linkbudget", "bwp", "requirements", "access"} <= set(rep)
    assert "capacity" not in rep
    verdicts = {v["requirement"]: v for v in rep["requirements"]["verdicts"]}
    status = {name: {d["dimension"]: d["status"] for d in v["dimensions"]}
              for name, v in verdicts.items()}
    assert verdicts["IndustrialSensor"]["passed"]
    assert status["IndustrialSensor"]["dl_rate_mbps"] == "pass"
    assert status["VideoSurveillance:economic"]["ul_rate_mbps"] == "pass"
    assert status["Wearables"]["battery_lifetime_h"] == "pass"


def test_presets():
    doc = json.loads(ok("presets"))
    assert doc["profiles"]["RedCapBaselineFr1"]["max_bandwidth_mhz"] == 20
    assert doc["deployments"]["UrbanMicroFR1"]["dl_psd_dbm_per_mhz"] == 24


def test_multiple_files_to_stdout_have_headers(fr1_path):
    out = ok("bwp", "--scenario", fr1_path)
    assert out.startswith("==> bwp.json <==\n")
    assert "==> bwp_grid.txt <==" in out


# errors

def test_scenario_error_json_on_stderr(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("")
    code, out, err = cli("battery", "--scenario", bad)
    assert code == 2 and out == ""
    doc = error_doc(err)
    assert doc["error"] == "ScenarioValidationError"
    assert doc["message"].endswith("missing required section: profiles (+2 more)")
    assert doc["issues"][0]["path"] == "profiles"


def test_syntax_and_unknown_key_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"profiles": [,]}')
    assert error_doc(cli("datarate", "--scenario", bad)[2])["error"] == "ScenarioSyntaxError"
    bad.write_text('{"profilez": []}')
    assert error_doc(cli("datarate", "--scenario", bad)[2])["error"] == "UnknownKeyError"


def test_missing_file_and_bad_usage(fr1_path, tmp_path):
    code, out, err = cli("battery", "--scenario", tmp_path / "nope.json")
    assert code == 1 and error_doc(err)["subcommand"] == "battery"
    code, _, err = cli("battery")
    assert code == 2 and "usage" in error_doc(err)
    code, _, err = cli("teleport", "--scenario", fr1_path)
    assert code == 2
    code, _, err = cli("battery", "--scenario", fr1_path, "--cycles", "fast")
    assert code == 2


def test_analysis_errors_carry_subcommand(fr1_path, fr2_path):
    code, _, err = cli("linkbudget", "--scenario", fr1_path, "--profile", "ghost")
    assert code == 1 and error_doc(err)["subcommand"] == "linkbudget"
    code, _, err = cli("access-sim", "--scenario", fr1_path, "--devices", "0")
    assert code == 1
    code, _, err = cli("capacity-sim", "--scenario", fr2_path, "--fractions", "0,1")
    assert code == 1 and error_doc(err)["subcommand"] == "capacity-sim"
    code, _, err = cli("battery", "--scenario", fr1_path, "--cycles", "20000")
    assert code == 1


def test_help_per_subcommand():
    for sub in ("datarate", "battery", "linkbudget", "bwp", "access-sim", "capacity-sim",
                "report", "presets"):
        out = subprocess.run([sys.executable, "-m", "redcap_dim", sub, "--help"],
                             capture_output=True, text=True)
        assert out.returncode == 0 and "usage:" in out.stdout


# seeds

def _minimal(tmp_path, access=None, name="s.json"):
    doc = {"profiles": [{"id": "rc", "preset": "RedCapBaselineFr1"}],
           "carriers": [{"id": "c", "scs_khz": 30, "bandwidth_mhz": 20, "duplex_mode": "TDD"}],
           "deployment": {"preset": "UrbanMicroFR1"}}
    if access is not None:
        doc["access"] = access
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_seed_precedence(tmp_path, monkeypatch):
    path = _minimal(tmp_path)
    monkeypatch.delenv("REDCAP_DIM_SEED", raising=False)
    default = ok("access-sim", "--scenario", path)
    monkeypatch.setenv("REDCAP_DIM_SEED", "99")
    from_env = ok("access-sim", "--scenario", path)
    assert from_env != default
    assert from_env == ok("access-sim", "--scenario", path, "--seed", "99")
    # an explicit file value beats the environment
    pinned = _minimal(tmp_path, {"seed": 1}, "pinned.json")
    assert ok("access-sim", "--scenario", pinned) == default
    monkeypatch.setenv("REDCAP_DIM_SEED", "soon")
    code, _, err = cli("access-sim", "--scenario", path)
    assert code == 1 and "REDCAP_DIM_SEED" in error_doc(err)["message"]


# byte stability and goldens

GOLDEN_RUNS = {
    "datarate_fr1.csv": ("datarate", "fr1"),
    "battery_fr1.csv": ("battery", "fr1"),
    "linkbudget_fr1.csv": ("linkbudget", "fr1"),
    "linkbudget_fr2_trp23.csv": ("linkbudget", "fr2", "--trp", "23"),
    "bwp_fr1.txt": ("bwp", "fr1"),
    "access_fr1.txt": ("access-sim", "fr1", "--format", "JSON"),
    "report_fr1.json": ("report", "fr1", "--no-capacity"),
    "report_fr2.json": ("report", "fr2"),
    "capacity_fr1_small.txt": ("capacity-sim", "fr1", "--drops", "1", "--fractions", "0,0.6"),
}


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden_outputs_byte_stable(name, fr1_path, fr2_path, monkeypatch):
    monkeypatch.delenv("REDCAP_DIM_SEED", raising=False)
    sub, which, *extra = GOLDEN_RUNS[name]
    path = fr1_path if which == "fr1" else fr2_path
    first = ok(sub, "--scenario", path, *extra)
    second = ok(sub, "--scenario", path, *extra)
    assert first == second
    golden = GOLDEN / name
    if REGEN:
        golden.parent.mkdir(exist_ok=True)
        golden.write_text(first, encoding="utf-8")
    assert golden.read_text(encoding="utf-8") == first


def test_module_entry_point(fr1_path):
    out = subprocess.run([sys.executable, "-m", "redcap_dim", "datarate", "--scenario",
                          str(fr1_path)], capture_output=True, text=True)
    assert out.returncode == 0 and out.stderr == ""
    assert out.stdout == ok("datarate", "--scenario", fr1_path)
