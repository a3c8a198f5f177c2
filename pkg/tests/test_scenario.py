import json
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from redcap_dim.scenario import (
    ScenarioError, ScenarioSyntaxError, ScenarioValidationError,
    UnknownKeyError, load_scenario, parse_scenario, scenario_to_dict, serialize_scenario,
)

jsonschema = pytest.importorskip("jsonschema")

MINIMAL = {
    "profiles": [{"id": "rc", "preset": "RedCapBaselineFr1"}],
    "carriers": [{"id": "c", "scs_khz": 30, "bandwidth_mhz": 20, "duplex_mode": "TDD"}],
    "deployment": {"preset": "UrbanMicroFR1"},
}


def doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    d.update(changes)
    return json.dumps(d, indent=2)


def schema():
    text = (resources.files("redcap_dim") / "scenarios" / "scenario.schema.json").read_text()
    return json.loads(text)


def raises(text, cls, match=None):
    with pytest.raises(cls, match=match) as err:
        parse_scenario(text)
    return err.value


@pytest.mark.parametrize("name", ["fr1_urban_micro", "fr2_indoor"])
def test_shipped_scenarios_round_trip(name, request):
    path = request.getfixturevalue(name.split("_")[0] + "_path")
    scn = load_scenario(path)
    again = parse_scenario(serialize_scenario(scn))
    assert again == scn
    assert serialize_scenario(again) == serialize_scenario(scn)
    # the serialized form is fully explicit
    assert again.defaults_applied == ()


@pytest.mark.parametrize("name", ["fr1_urban_micro", "fr2_indoor"])
def test_shipped_scenarios_match_schema(name, request):
    path = request.getfixturevalue(name.split("_")[0] + "_path")
    validator = jsonschema.Draft202012Validator(schema())
    validator.validate(json.loads(open(path).read()))
    validator.validate(scenario_to_dict(load_scenario(path)))


def test_schema_rejects_unknown_keys():
    validator = jsonschema.Draft202012Validator(schema())
    assert not validator.is_valid(json.loads(doc(extra={})))
    bad = json.loads(doc())
    bad["profiles"][0]["colour"] = "red"
    assert not validator.is_valid(bad)


def test_fr1_shipped_content(fr1_path):
    scn = load_scenario(fr1_path)
    assert scn.profile("redcap").name == "RedCapBaselineFr1"
    assert scn.profile("redcap-2rx").rx_branches == 2
    assert scn.profile("ReferenceNrFr1").max_dl_modulation_order == 8
    assert scn.deployment.dl_psd_dbm_per_mhz == 24.0
    assert scn.capacity.scenario.n_cells == 7 and scn.capacity.scenario.users_per_cell == 30
    assert scn.capacity.scenario.drops == 10
    assert scn.capacity.fractions == (0.0, 0.2, 0.4, 0.6, 0.8, 0.9)
    assert scn.access.config.id_method.value == "Msg3Lcid"


def test_minimal_document_gets_defaults():
    scn = parse_scenario(doc())
    assert scn.name == "scenario"
    assert set(scn.defaults_applied) >= {"power", "access", "output", "bwp", "capacity",
                                         "linkbudget", "requirements"}
    assert not scn.was_given("power") and scn.was_given("profiles")
    assert scn.bwp.carrier == "c" and scn.bwp.profile == "rc"
    assert scn.requirements.profile == "rc"
    assert scn.output.format.value == "CSV" and scn.output.path == "-"
    # no reference profile in the file: the FR1 preset stands in
    assert scn.capacity.embb_profile == "ReferenceNrFr1"
    assert parse_scenario(serialize_scenario(scn)) == scn


def test_profile_overrides_preset():
    text = doc(profiles=[{"id": "rc2", "preset": "RedCapBaselineFr1", "rx_branches": 2,
                          "dl_mimo_layers": 2}])
    p = parse_scenario(text).profile("rc2")
    assert (p.rx_branches, p.dl_mimo_layers, p.max_bandwidth_mhz) == (2, 2, 20.0)


def test_empty_file_and_empty_object():
    for text in ("", "   \n", "{}"):
        err = raises(text, ScenarioValidationError, "missing required section: profiles")
        assert [i.path for i in err.issues][:3] == ["profiles", "carriers", "deployment"]


def test_redcap_bandwidth_limit_named():
    text = doc(profiles=[{"id": "rc", "preset": "RedCapBaselineFr1", "max_bandwidth_mhz": 40}])
    err = raises(text, ScenarioValidationError, "20 MHz")
    assert err.issues[0].path == "profiles[0]"
    assert "RedCap FR1 maximum device bandwidth is 20 MHz" in err.issues[0].message


def test_unknown_section_and_key():
    err = raises(doc(telemetry={}), UnknownKeyError, "telemetry")
    assert err.issues[0].line == 1
    text = doc(deployment={"preset": "UrbanMicroFR1", "psd": 20})
    err = raises(text, UnknownKeyError)
    assert err.issues[0].path == "deployment.psd"
    assert err.issues[0].line == text.splitlines().index('  "deployment": {') + 1


def test_syntax_errors():
    err = raises('{"profiles": [}', ScenarioSyntaxError)
    assert err.issues[0].line == 1 and err.issues[0].column is not None
    err = raises('{"profiles": [],\n "profiles": []}', ScenarioSyntaxError, "duplicate")
    assert err.issues[0].path == "profiles"


def test_error_classes_distinct():
    assert len({ScenarioSyntaxError, UnknownKeyError, ScenarioValidationError}) == 3
    for cls in (ScenarioSyntaxError, UnknownKeyError, ScenarioValidationError):
        assert issubclass(cls, ScenarioError) and issubclass(cls, ValueError)


def test_type_errors_are_validation_errors():
    text = doc(carriers=[{"id": "c", "scs_khz": "thirty", "bandwidth_mhz": 20,
                          "duplex_mode": "TDD"}])
    err = raises(text, ScenarioValidationError)
    assert err.issues[0].path.startswith("carriers[0]")


def test_all_issues_collected():
    text = doc(deployment={"preset": "Mars"},
               carriers=[{"id": "c", "scs_khz": 30, "bandwidth_mhz": 21, "duplex_mode": "TDD"}])
    err = raises(text, ScenarioValidationError)
    paths = {i.path.split(".")[0].split("[")[0] for i in err.issues}
    assert {"deployment", "carriers"} <= paths
    assert err.to_dict()["error"] == "ScenarioValidationError"
    assert len(err.to_dict()["issues"]) == len(err.issues)


def test_unresolved_references():
    err = raises(doc(capacity={"redcap_profile": "ghost"}), ScenarioValidationError, "ghost")
    assert err.issues[0].path.startswith("capacity")
    raises(doc(bwp={"carrier": "nowhere"}), ScenarioValidationError, "nowhere")
    raises(doc(requirements={"profile": "ghost", "use_cases": []}), ScenarioValidationError)


def test_duplicate_ids_rejected():
    text = doc(profiles=[{"id": "a", "preset": "RedCapBaselineFr1"},
                         {"id": "a", "preset": "ReferenceNrFr1"}])
    raises(text, ScenarioValidationError, "a")


def test_capacity_profile_roles_checked():
    raises(doc(capacity={"embb_profile": "rc"}), ScenarioValidationError)


def test_fraction_one_rejected():
    raises(doc(capacity={"fractions": [0.0, 1.0]}), ScenarioValidationError)


def test_requirement_entries():
    text = doc(requirements={"use_cases": [
        {"use_case": "Custom", "dl_rate_mbps": [1, None]},
        {"use_case": "VideoSurveillance", "variant": "economic",
         "operating_point": {"rrc_state": "Idle", "cycle_s": 61.44, "iat_s": 600}},
    ]})
    scn = parse_scenario(text)
    custom, video = scn.requirements.use_cases
    assert custom.requirement.dl_rate_mbps.low == 1.0 and custom.requirement.dl_rate_mbps.high is None
    assert video.operating_point.drx().edrx_enabled
    assert parse_scenario(serialize_scenario(scn)) == scn


def test_output_section():
    scn = parse_scenario(doc(output={"format": "JSON", "path": "out"}))
    assert scn.output.format.value == "JSON"
    raises(doc(output={"format": "XML"}), ScenarioValidationError)


def test_document_must_be_object():
    raises("[1, 2]", ScenarioValidationError, "JSON object")


@settings(max_examples=40)
@given(st.sampled_from(["power", "access", "output"]),
       st.dictionaries(st.sampled_from(["bogus", "zzz", "rrc_statee"]), st.integers(), min_size=1))
def test_unknown_keys_in_optional_sections(section, extra):
    err = raises(doc(**{section: extra}), UnknownKeyError)
    assert all(i.path.startswith(section + ".") for i in err.issues)
