"""Scenario files: one JSON document that drives every analysis.

Top-level sections (``profiles``, ``carriers`` and ``deployment`` are
required, the rest fall back to defaults):

``profiles``      list of device profiles, each with a unique ``id``; a
                  ``preset`` supplies every field not given explicitly
``carriers``      list of carriers, each with a unique ``id``
``deployment``    a ``preset`` with optional overrides, or every field
``power``         power model overrides plus the (cycle, IAT) sweep grid
``bwp``           carrier, RedCap profile and feature flags for BWP planning
``access``        random-access settings and the device population
``capacity``      multi-cell capacity study settings and RedCap fractions
``linkbudget``    device pair, TRP override and optional SNR table files
``requirements``  use cases to check and the (profile, carrier) to check with
``output``        report format and destination

Every omitted optional section or key is filled in and its dotted path is
listed in ``ScenarioFile.defaults_applied``. Profile references in
``capacity`` and ``linkbudget`` may name a profile ``id`` or a preset.
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
import math
import types
import typing
from dataclasses import MISSING, dataclass, field, fields, replace
from enum import Enum
from typing import Optional

from .access import AccessConfig
from .bwp import CORESET0_PRBS, DEFAULT_PUCCH_PRBS, SSB_PRBS, Release17Features
from .capacity import CapacityScenario, SinrToSe, TrafficModel
from .model import (BUILTIN_REQUIREMENTS, CapabilityProfile, CarrierConfig, DeploymentKind,
                    DeploymentScenario, FrequencyRange, Interval, ProfileKind, UseCase,
                    UseCaseRequirement, builtin_deployment, builtin_profile, builtin_requirement,
                    to_dict, _BUILTIN_PROFILES)
from .power import ArrivalProcess, DrxConfig, PowerModel, RrcState, TrafficPattern

SECTIONS = ("profiles", "carriers", "deployment", "power", "bwp", "access", "capacity",
            "linkbudget", "requirements", "output")
REQUIRED_SECTIONS = ("profiles", "carriers", "deployment")


# ---------------------------------------------------------------------------
# Errors


@dataclass(frozen=True)
class Issue:
    kind: str  # "syntax" | "unknown-key" | "invalid"
    path: str
    message: str
    line: Optional[int] = None
    column: Optional[int] = None

    def __str__(self) -> str:
        where = self.path or "<document>"
        if self.line is not None:
            where += f" (line {self.line}" + (f", column {self.column})" if self.column else ")")
        return f"{where}: {self.message}"


class ScenarioError(ValueError):
    """Base class; ``issues`` lists every problem found, first one first."""

    def __init__(self, issues: list[Issue]):
        self.issues = list(issues)
        first = str(self.issues[0])
        more = len(self.issues) - 1
        super().__init__(first + (f" (+{more} more)" if more else ""))

    def to_dict(self) -> dict:
        return {"error": type(self).__name__,
                "issues": [to_dict(i) for i in self.issues]}


class ScenarioSyntaxError(ScenarioError):
    pass


class UnknownKeyError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    pass


_ERROR_CLASS = {"syntax": ScenarioSyntaxError, "unknown-key": UnknownKeyError,
                "invalid": ScenarioValidationError}


# ---------------------------------------------------------------------------
# Section types


class OutputFormat(str, Enum):
    CSV = "CSV"
    JSON = "JSON"


@dataclass(frozen=True)
class OperatingPoint:
    """DRX/traffic point at which a use case's lifetime and latency are judged."""
    rrc_state: RrcState = RrcState.Idle
    cycle_s: float = 2.56
    iat_s: float = 3600.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rrc_state", RrcState(self.rrc_state))
        self.drx()
        TrafficPattern(self.iat_s)

    def drx(self) -> DrxConfig:
        return DrxConfig.for_cycle(self.rrc_state, self.cycle_s)


@dataclass(frozen=True)
class PowerSection:
    model: PowerModel = field(default_factory=PowerModel)
    rrc_state: RrcState = RrcState.Idle
    cycles_s: tuple[float, ...] = (2.56, 10.24, 61.44, 163.84, 655.36)
    iat_s: tuple[float, ...] = (600.0, 3600.0, 86400.0)
    arrival_process: ArrivalProcess = ArrivalProcess.Periodic

    def __post_init__(self) -> None:
        object.__setattr__(self, "rrc_state", RrcState(self.rrc_state))
        object.__setattr__(self, "arrival_process", ArrivalProcess(self.arrival_process))
        object.__setattr__(self, "cycles_s", tuple(self.cycles_s))
        object.__setattr__(self, "iat_s", tuple(self.iat_s))
        if not self.cycles_s or not self.iat_s:
            raise ValueError("cycles_s and iat_s need at least one value each")
        for c in self.cycles_s:
            DrxConfig.for_cycle(self.rrc_state, c)
        for iat in self.iat_s:
            TrafficPattern(iat)


@dataclass(frozen=True)
class BwpSection:
    carrier: str
    profile: str
    features: Release17Features = field(default_factory=Release17Features.all)
    ssb_prbs: int = SSB_PRBS
    coreset0_prbs: int = CORESET0_PRBS
    pucch_prbs: int = DEFAULT_PUCCH_PRBS
    ssb_prb_range: Optional[tuple[int, int]] = None
    coreset0_prb_range: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        for name in ("ssb_prbs", "coreset0_prbs", "pucch_prbs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be ≥ 1")
        for name in ("ssb_prb_range", "coreset0_prb_range"):
            value = getattr(self, name)
            if value is not None:
                if len(value) != 2:
                    raise ValueError(f"{name} must be [first_prb, last_prb]")
                object.__setattr__(self, name, (int(value[0]), int(value[1])))


@dataclass(frozen=True)
class AccessSection:
    config: AccessConfig = field(default_factory=AccessConfig)
    devices: int = 100
    redcap_fraction: float = 0.5
    seed: int = 1

    def __post_init__(self) -> None:
        if self.devices < 1:
            raise ValueError("devices must be ≥ 1")
        if not 0.0 <= self.redcap_fraction <= 1.0:
            raise ValueError("redcap_fraction must lie in [0, 1]")


DEFAULT_FRACTIONS = (0.0, 0.2, 0.4, 0.6, 0.8, 0.9)


@dataclass(frozen=True)
class CapacitySection:
    scenario: CapacityScenario
    embb_profile: str
    redcap_profile: str
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS

    def __post_init__(self) -> None:
        object.__setattr__(self, "fractions", tuple(self.fractions))
        if not self.fractions:
            raise ValueError("fractions needs at least one value")
        for f in self.fractions:
            replace(self.scenario, redcap_fraction=f)

    def at(self, fraction: float) -> CapacityScenario:
        return replace(self.scenario, redcap_fraction=fraction)


@dataclass(frozen=True)
class LinkbudgetSection:
    redcap_profile: str
    reference_profile: str
    efficiency_penalty: bool = False
    apply_panel_reduction: bool = False
    trp_dbm: Optional[float] = None
    channels_csv: Optional[str] = None
    snr_csv: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.channels_csv is None) != (self.snr_csv is None):
            raise ValueError("channels_csv and snr_csv must be given together")


@dataclass(frozen=True)
class RequirementEntry:
    requirement: UseCaseRequirement
    operating_point: Optional[OperatingPoint] = None


@dataclass(frozen=True)
class RequirementsSection:
    profile: str
    carrier: str
    use_cases: tuple[RequirementEntry, ...]


@dataclass(frozen=True)
class OutputSection:
    format: OutputFormat = OutputFormat.CSV
    path: str = "-"

    def __post_init__(self) -> None:
        object.__setattr__(self, "format", OutputFormat(self.format))
        if not self.path:
            raise ValueError("path must be non-empty ('-' for stdout)")


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    profiles: dict[str, CapabilityProfile]
    carriers: dict[str, CarrierConfig]
    deployment: DeploymentScenario
    power: PowerSection
    bwp: Optional[BwpSection]
    access: AccessSection
    capacity: Optional[CapacitySection]
    linkbudget: Optional[LinkbudgetSection]
    requirements: Optional[RequirementsSection]
    output: OutputSection
    defaults_applied: tuple[str, ...] = field(default=(), compare=False)

    def profile(self, ref: str) -> CapabilityProfile:
        """Profile by id, falling back to a preset name."""
        if ref in self.profiles:
            return self.profiles[ref]
        return builtin_profile(ProfileKind(ref))

    def carrier(self, ref: str) -> CarrierConfig:
        return self.carriers[ref]

    def was_given(self, path: str) -> bool:
        return path not in self.defaults_applied


# ---------------------------------------------------------------------------
# JSON decoding with object positions


class _LocatingDecoder(json.JSONDecoder):
    """Records the offset of every JSON object and rejects duplicate keys."""

    def __init__(self) -> None:
        super().__init__(object_pairs_hook=self._pairs)
        self.positions: dict[int, int] = {}
        self.duplicates: list[tuple[str, int]] = []
        self._starts: list[int] = []
        self.parse_object = self._parse_object
        self.scan_once = json.scanner.py_make_scanner(self)

    def _parse_object(self, s_and_end, *args, **kwargs):
        self._starts.append(s_and_end[1] - 1)
        return json.decoder.JSONObject(s_and_end, *args, **kwargs)

    def _pairs(self, pairs):
        start = self._starts.pop()
        out = {}
        for k, v in pairs:
            if k in out:
                self.duplicates.append((k, start))
            out[k] = v
        self.positions[id(out)] = start
        return out


class _Abort(Exception):
    """Stops reading the current entry after its issue has been recorded."""


class _Ctx:
    def __init__(self, text: str, positions: dict[int, int]):
        self.text = text
        self.positions = positions
        self.issues: list[Issue] = []
        self.defaults: list[str] = []

    def line_of(self, obj) -> Optional[int]:
        pos = self.positions.get(id(obj))
        return None if pos is None else self.text.count("\n", 0, pos) + 1

    def add(self, kind: str, path: str, message: str, near=None) -> None:
        self.issues.append(Issue(kind, path, message, self.line_of(near)))

    def invalid(self, path: str, message: str, near=None) -> None:
        self.add("invalid", path, message, near)

    def build(self, path: str, cls, kwargs: dict, near=None):
        try:
            return cls(**kwargs)
        except (ValueError, KeyError) as exc:
            msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
            self.invalid(path, str(msg), near)
            raise _Abort from None


_MISSING = object()


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _type_name(hint) -> str:
    if isinstance(hint, type) and issubclass(hint, Enum):
        return "one of " + ", ".join(repr(m.value) for m in hint)
    return {bool: "a boolean", int: "an integer", float: "a number", str: "a string"}.get(
        hint, str(hint))


def _convert(ctx: _Ctx, path: str, value, hint, near):
    origin = typing.get_origin(hint)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if value is None:
            return None
        return _convert(ctx, path, value, args[0], near)
    if origin is tuple:
        if not isinstance(value, list):
            ctx.invalid(path, "expected a list", near)
            raise _Abort
        item = typing.get_args(hint)[0]
        return tuple(_convert(ctx, _join(path, i), v, item, near) for i, v in enumerate(value))
    ok = False
    if hint is bool:
        ok = isinstance(value, bool)
    elif hint is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif hint is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if ok:
            value = float(value)
            ok = not math.isnan(value)
    elif hint is str:
        ok = isinstance(value, str)
    elif isinstance(hint, type) and issubclass(hint, Enum):
        ok = isinstance(value, str) and value in {m.value for m in hint}
        if ok:
            value = hint(value)
    if not ok:
        ctx.invalid(path, f"expected {_type_name(hint)}, got {json.dumps(value)}", near)
        raise _Abort
    return value


class _Obj:
    def __init__(self, ctx: _Ctx, path: str, data, what: str = "an object"):
        if not isinstance(data, dict):
            ctx.invalid(path, f"expected {what}")
            raise _Abort
        self.ctx, self.path, self.data = ctx, path, data

    def sub(self, key) -> str:
        return _join(self.path, key)

    def check_keys(self, allowed) -> None:
        allowed = set(allowed)
        unknown = [k for k in self.data if k not in allowed]
        for k in unknown:
            self.ctx.add("unknown-key", self.sub(k),
                         f"unknown key {k!r}; expected one of {', '.join(sorted(allowed))}",
                         self.data)
        if unknown:
            raise _Abort

    def get(self, key: str, hint, default=_MISSING, record: bool = True):
        if key not in self.data:
            if default is _MISSING:
                self.ctx.invalid(self.sub(key), f"missing required key: {key}", self.data)
                raise _Abort
            if record:
                self.ctx.defaults.append(self.sub(key))
            return default
        return _convert(self.ctx, self.sub(key), self.data[key], hint, self.data)

    def child(self, key: str) -> Optional["_Obj"]:
        if key not in self.data:
            return None
        return _Obj(self.ctx, self.sub(key), self.data[key])

    def fields_of(self, cls, skip=(), base: Optional[dict] = None) -> dict:
        """Keyword arguments for ``cls`` from this object.

        Fields present in ``base`` (a preset) need not appear; others fall
        back to the dataclass default, which is recorded.
        """
        hints = typing.get_type_hints(cls)
        kwargs = {}
        for f in fields(cls):
            if f.name in skip:
                continue
            if base is not None and f.name in base:
                kwargs[f.name] = self.get(f.name, hints[f.name], base[f.name], record=False)
                continue
            if f.default is not MISSING:
                default = f.default
            elif f.default_factory is not MISSING:
                default = f.default_factory()
            else:
                default = _MISSING
            value = self.get(f.name, hints[f.name], default)
            if value is not _MISSING:
                kwargs[f.name] = value
        return kwargs


def _field_names(cls, skip=()) -> list[str]:
    return [f.name for f in fields(cls) if f.name not in skip]


# ---------------------------------------------------------------------------
# Section readers


def _read_list(ctx: _Ctx, root: _Obj, key: str, reader) -> dict:
    items = root.data[key]
    if not isinstance(items, list) or not items:
        ctx.invalid(key, f"{key} must be a non-empty list", root.data)
        raise _Abort
    out = {}
    for i, raw in enumerate(items):
        path = _join(key, i)
        try:
            o = _Obj(ctx, path, raw)
            ident, value = reader(o)
        except _Abort:
            continue
        if ident in out:
            ctx.invalid(_join(path, "id"), f"duplicate id {ident!r}", raw)
            continue
        out[ident] = value
    return out


def _read_profile(o: _Obj):
    o.check_keys(["id", "preset"] + _field_names(CapabilityProfile))
    ident = o.get("id", str)
    preset = o.get("preset", Optional[ProfileKind], None, record=False)
    base = None
    if preset is not None:
        base = dict(_BUILTIN_PROFILES[preset], name=preset.value)
    kwargs = o.fields_of(CapabilityProfile, base=base)
    if base is None and "name" not in o.data:
        kwargs["name"] = ident
    return ident, o.ctx.build(o.path, CapabilityProfile, kwargs, o.data)


def _read_carrier(o: _Obj):
    o.check_keys(["id"] + _field_names(CarrierConfig, skip=("name",)))
    ident = o.get("id", str)
    kwargs = o.fields_of(CarrierConfig, skip=("name",))
    return ident, o.ctx.build(o.path, CarrierConfig, dict(kwargs, name=ident), o.data)


def _read_deployment(o: _Obj) -> DeploymentScenario:
    o.check_keys(["preset"] + _field_names(DeploymentScenario))
    preset = o.get("preset", Optional[DeploymentKind], None, record=False)
    base = None
    if preset is not None:
        if preset is DeploymentKind.Custom:
            o.ctx.invalid(o.sub("preset"), "Custom has no preset values; give every field",
                          o.data)
            raise _Abort
        base = to_dict(builtin_deployment(preset))
        base["name"] = preset
    return o.ctx.build(o.path, DeploymentScenario, o.fields_of(DeploymentScenario, base=base),
                       o.data)


def _read_power(o: _Obj) -> PowerSection:
    o.check_keys(_field_names(PowerSection))
    model_obj = o.child("model")
    if model_obj is None:
        o.ctx.defaults.append(o.sub("model"))
        model = PowerModel()
    else:
        model_obj.check_keys(_field_names(PowerModel))
        model = o.ctx.build(model_obj.path, PowerModel, model_obj.fields_of(PowerModel),
                            model_obj.data)
    kwargs = o.fields_of(PowerSection, skip=("model",))
    return o.ctx.build(o.path, PowerSection, dict(kwargs, model=model), o.data)


def _first(profiles: dict, pred) -> Optional[str]:
    return next((k for k, p in profiles.items() if pred(p)), None)


def _compatible(profile: CapabilityProfile, carrier: CarrierConfig) -> bool:
    return (carrier.frequency_range is profile.frequency_range
            and carrier.bandwidth_mhz <= profile.max_bandwidth_mhz)


def _read_bwp(o: _Obj, profiles: dict, carriers: dict) -> BwpSection:
    o.check_keys(_field_names(BwpSection))
    default_profile = _first(profiles, lambda p: p.is_redcap)
    profile = o.get("profile", str, default_profile if default_profile else _MISSING)
    if profile not in profiles or not profiles[profile].is_redcap:
        o.ctx.invalid(o.sub("profile"), f"{profile!r} is not a RedCap profile defined in "
                      f"profiles", o.data)
        raise _Abort
    fr = profiles[profile].frequency_range
    # widest carrier of the profile's range leaves the most room for placement
    same_fr = sorted((k for k, c in carriers.items() if c.frequency_range is fr),
                     key=lambda k: -carriers[k].n_prb)
    carrier = o.get("carrier", str, same_fr[0] if same_fr else _MISSING)
    if carrier not in carriers:
        o.ctx.invalid(o.sub("carrier"), f"unknown carrier {carrier!r}", o.data)
        raise _Abort
    if carriers[carrier].frequency_range is not fr:
        o.ctx.invalid(o.sub("carrier"), f"carrier {carrier!r} is not {fr.value}", o.data)
        raise _Abort
    feat_obj = o.child("features")
    if feat_obj is None:
        o.ctx.defaults.append(o.sub("features"))
        features = Release17Features.all()
    else:
        feat_obj.check_keys(_field_names(Release17Features))
        features = Release17Features(**feat_obj.fields_of(Release17Features))
    kwargs = o.fields_of(BwpSection, skip=("carrier", "profile", "features"))
    return o.ctx.build(o.path, BwpSection,
                       dict(kwargs, carrier=carrier, profile=profile, features=features), o.data)


_ACCESS_OWN = ("devices", "redcap_fraction", "seed")


def _int_map(o: _Obj, key: str, hint, default):
    """A JSON object of objects or numbers, read as plain dicts."""
    if key not in o.data:
        o.ctx.defaults.append(o.sub(key))
        return default
    raw = o.data[key]
    if not isinstance(raw, dict):
        o.ctx.invalid(o.sub(key), "expected an object", o.data)
        raise _Abort
    out = {}
    for k, v in raw.items():
        if isinstance(v, dict):
            out[k] = {kk: _convert(o.ctx, _join(_join(o.sub(key), k), kk), vv, hint, v)
                      for kk, vv in v.items()}
        else:
            out[k] = _convert(o.ctx, _join(o.sub(key), k), v, hint, raw)
    return out


def _read_access(o: _Obj) -> AccessSection:
    cfg_fields = _field_names(AccessConfig)
    o.check_keys(cfg_fields + list(_ACCESS_OWN))
    defaults = AccessConfig()
    kwargs = o.fields_of(AccessConfig, skip=("msg_prb_costs", "step_delays_ms", "id_method"))
    kwargs["id_method"] = o.get("id_method", str, defaults.id_method.value)
    kwargs["msg_prb_costs"] = _int_map(o, "msg_prb_costs", int, defaults.msg_prb_costs)
    kwargs["step_delays_ms"] = _int_map(o, "step_delays_ms", float, defaults.step_delays_ms)
    cfg = o.ctx.build(o.path, AccessConfig, kwargs, o.data)
    own = o.fields_of(AccessSection, skip=("config",))
    return o.ctx.build(o.path, AccessSection, dict(own, config=cfg), o.data)


_CAPACITY_REFS = ("embb_profile", "redcap_profile")
_CAPACITY_NESTED = {"sinr_to_se": SinrToSe, "embb_traffic": TrafficModel,
                    "redcap_traffic": TrafficModel}


def _profile_ref(o: _Obj, key: str, profiles: dict, default: str, redcap: bool) -> tuple[str, CapabilityProfile]:
    ref = o.get(key, str, default)
    if ref in profiles:
        profile = profiles[ref]
    elif ref in ProfileKind.__members__:
        profile = builtin_profile(ref)
    else:
        o.ctx.invalid(o.sub(key), f"{ref!r} is neither a profile id nor a preset", o.data)
        raise _Abort
    if profile.is_redcap is not redcap:
        kind = "a RedCap" if redcap else "a non-RedCap"
        o.ctx.invalid(o.sub(key), f"{ref!r} must be {kind} profile", o.data)
        raise _Abort
    return ref, profile


def _default_ref(profiles: dict, redcap: bool, fr: FrequencyRange) -> str:
    found = _first(profiles, lambda p: p.is_redcap is redcap and p.frequency_range is fr)
    if found:
        return found
    if redcap:
        return (ProfileKind.RedCapBaselineFr1 if fr is FrequencyRange.FR1
                else ProfileKind.RedCapBaselineFr2).value
    return (ProfileKind.ReferenceNrFr1 if fr is FrequencyRange.FR1
            else ProfileKind.ReferenceNrFr2).value


def _read_capacity(o: _Obj, profiles: dict) -> CapacitySection:
    skip = ("redcap_fraction",) + _CAPACITY_REFS + tuple(_CAPACITY_NESTED)
    o.check_keys(_field_names(CapacityScenario, skip=("redcap_fraction",)) + ["fractions"])
    kwargs = o.fields_of(CapacityScenario, skip=skip)
    for key, cls in _CAPACITY_NESTED.items():
        nested = o.child(key)
        if nested is None:
            o.ctx.defaults.append(o.sub(key))
            continue
        nested.check_keys(_field_names(cls))
        kwargs[key] = nested.ctx.build(nested.path, cls, nested.fields_of(cls), nested.data)
    embb_id, embb = _profile_ref(o, "embb_profile", profiles,
                                 _default_ref(profiles, False, FrequencyRange.FR1), False)
    redcap_id, redcap = _profile_ref(o, "redcap_profile", profiles,
                                     _default_ref(profiles, True, FrequencyRange.FR1), True)
    fractions = o.get("fractions", tuple[float, ...], DEFAULT_FRACTIONS)
    scn = o.ctx.build(o.path, CapacityScenario,
                      dict(kwargs, embb_profile=embb, redcap_profile=redcap), o.data)
    return o.ctx.build(o.path, CapacitySection,
                       dict(scenario=scn, embb_profile=embb_id, redcap_profile=redcap_id,
                            fractions=fractions), o.data)


def _read_linkbudget(o: _Obj, profiles: dict, fr: FrequencyRange) -> LinkbudgetSection:
    o.check_keys(_field_names(LinkbudgetSection))
    redcap_id, redcap = _profile_ref(o, "redcap_profile", profiles,
                                     _default_ref(profiles, True, fr), True)
    ref_id, ref = _profile_ref(o, "reference_profile", profiles,
                               _default_ref(profiles, False, fr), False)
    for key, p in (("redcap_profile", redcap), ("reference_profile", ref)):
        if p.frequency_range is not fr:
            o.ctx.invalid(o.sub(key), f"profile is {p.frequency_range.value} but the "
                          f"deployment is {fr.value}", o.data)
            raise _Abort
    kwargs = o.fields_of(LinkbudgetSection, skip=("redcap_profile", "reference_profile"))
    return o.ctx.build(o.path, LinkbudgetSection,
                       dict(kwargs, redcap_profile=redcap_id, reference_profile=ref_id), o.data)


_INTERVALS = ("dl_rate_mbps", "ul_rate_mbps", "battery_lifetime")


def _read_use_case(o: _Obj) -> RequirementEntry:
    names = ["use_case", "operating_point"] + _field_names(UseCaseRequirement, skip=("name",))
    o.check_keys(names)
    name = o.get("use_case", UseCase)
    variant = o.get("variant", str, "", record=False)
    base = None
    if name is not UseCase.Custom:
        try:
            preset = builtin_requirement(name, variant)
        except KeyError as exc:
            o.ctx.invalid(o.sub("variant"), str(exc.args[0]), o.data)
            raise _Abort from None
        base = {f.name: getattr(preset, f.name) for f in fields(UseCaseRequirement)}
    hints = typing.get_type_hints(UseCaseRequirement)
    kwargs = {"name": name, "variant": base["variant"] if base else variant}
    for f in fields(UseCaseRequirement):
        if f.name in ("name", "variant"):
            continue
        default = base[f.name] if base else f.default
        if f.name not in _INTERVALS:
            kwargs[f.name] = o.get(f.name, hints[f.name], default, record=base is None)
        elif f.name not in o.data:
            if base is None:
                o.ctx.defaults.append(o.sub(f.name))
            kwargs[f.name] = default
        else:
            bounds = o.get(f.name, Optional[tuple[Optional[float], ...]])
            if bounds is not None and (len(bounds) != 2 or bounds[0] is None):
                o.ctx.invalid(o.sub(f.name), "expected [low, high] with high optionally null",
                              o.data)
                raise _Abort
            kwargs[f.name] = None if bounds is None else o.ctx.build(
                o.sub(f.name), Interval, {"low": bounds[0], "high": bounds[1]}, o.data)
    req = o.ctx.build(o.path, UseCaseRequirement, kwargs, o.data)
    point = None
    op = o.child("operating_point")
    if op is not None:
        op.check_keys(_field_names(OperatingPoint))
        point = op.ctx.build(op.path, OperatingPoint, op.fields_of(OperatingPoint), op.data)
    return RequirementEntry(req, point)


def _read_requirements(o: _Obj, profiles: dict, carriers: dict) -> RequirementsSection:
    o.check_keys(_field_names(RequirementsSection))
    profile = o.get("profile", str, _first(profiles, lambda p: p.is_redcap) or _MISSING)
    if profile not in profiles:
        o.ctx.invalid(o.sub("profile"), f"unknown profile {profile!r}", o.data)
        raise _Abort
    prof = profiles[profile]
    default_carrier = next((k for k, c in carriers.items() if _compatible(prof, c)), None)
    carrier = o.get("carrier", str, default_carrier or _MISSING)
    if carrier not in carriers:
        o.ctx.invalid(o.sub("carrier"), f"unknown carrier {carrier!r}", o.data)
        raise _Abort
    if not _compatible(prof, carriers[carrier]):
        o.ctx.invalid(o.sub("carrier"), f"profile {profile!r} cannot operate on carrier "
                      f"{carrier!r}", o.data)
        raise _Abort
    if "use_cases" not in o.data:
        o.ctx.defaults.append(o.sub("use_cases"))
        entries = tuple(RequirementEntry(r) for r in BUILTIN_REQUIREMENTS)
    else:
        raw = o.data["use_cases"]
        if not isinstance(raw, list) or not raw:
            o.ctx.invalid(o.sub("use_cases"), "use_cases must be a non-empty list", o.data)
            raise _Abort
        entries = []
        for i, item in enumerate(raw):
            try:
                entries.append(_read_use_case(_Obj(o.ctx, _join(o.sub("use_cases"), i), item)))
            except _Abort:
                pass
        entries = tuple(entries)
    return RequirementsSection(profile, carrier, entries)


def _read_output(o: _Obj) -> OutputSection:
    o.check_keys(_field_names(OutputSection))
    return o.ctx.build(o.path, OutputSection, o.fields_of(OutputSection), o.data)


# ---------------------------------------------------------------------------
# Entry points


def parse_scenario(text: str) -> ScenarioFile:
    """Parse and validate a scenario document.

    Raises the error class of the first problem found; its ``issues``
    attribute lists every problem with a field path and, where known, the
    line of the enclosing object.
    """
    decoder = _LocatingDecoder()
    if text.strip():
        try:
            data = decoder.decode(text)
        except json.JSONDecodeError as exc:
            raise ScenarioSyntaxError([Issue("syntax", "", exc.msg, exc.lineno, exc.colno)]) from None
    else:
        data = {}
    ctx = _Ctx(text, decoder.positions)
    for key, pos in decoder.duplicates:
        ctx.issues.append(Issue("syntax", key, f"duplicate key {key!r}",
                                text.count("\n", 0, pos) + 1))
    if ctx.issues:
        raise ScenarioSyntaxError(ctx.issues)
    if not isinstance(data, dict):
        raise ScenarioValidationError([Issue("invalid", "", "the document must be a JSON object")])

    root = _Obj(ctx, "", data)
    for k in data:
        if k not in SECTIONS and k != "name":
            ctx.add("unknown-key", k, f"unknown section {k!r}; expected one of "
                    f"name, {', '.join(SECTIONS)}", data)
    for k in REQUIRED_SECTIONS:
        if k not in data:
            ctx.invalid(k, f"missing required section: {k}", data)

    def section(key, reader, *args):
        try:
            return reader(*args)
        except _Abort:
            return None

    def optional(key, reader, *args):
        if key in data:
            return section(key, lambda: reader(_Obj(ctx, key, data[key]), *args))
        ctx.defaults.append(key)
        n_issues, n_defaults = len(ctx.issues), len(ctx.defaults)
        value = section(key, lambda: reader(_Obj(ctx, key, {}), *args))
        if len(ctx.issues) > n_issues:
            # nothing in the file to default it from; the section stays absent
            del ctx.issues[n_issues:]
            del ctx.defaults[n_defaults:]
            return None
        return value

    name = section("name", lambda: root.get("name", str, "scenario"))
    profiles = carriers = deployment = None
    if "profiles" in data:
        profiles = section("profiles", _read_list, ctx, root, "profiles", _read_profile)
    if "carriers" in data:
        carriers = section("carriers", _read_list, ctx, root, "carriers", _read_carrier)
    if "deployment" in data:
        deployment = section("deployment",
                             lambda: _read_deployment(_Obj(ctx, "deployment", data["deployment"])))
    power = optional("power", _read_power)
    access = optional("access", _read_access)
    output = optional("output", _read_output)
    bwp = capacity = linkbudget = requirements = None
    if profiles and carriers:
        bwp = optional("bwp", _read_bwp, profiles, carriers)
        requirements = optional("requirements", _read_requirements, profiles, carriers)
    if profiles is not None:
        capacity = optional("capacity", _read_capacity, profiles)
        if deployment is not None:
            linkbudget = optional("linkbudget", _read_linkbudget, profiles,
                                  deployment.frequency_range)

    if ctx.issues:
        raise _ERROR_CLASS[ctx.issues[0].kind](ctx.issues)
    return ScenarioFile(name, profiles, carriers, deployment, power, bwp, access, capacity,
                        linkbudget, requirements, output, tuple(ctx.defaults))


def _interval(value: Optional[Interval]):
    return None if value is None else [value.low, value.high]


def scenario_to_dict(s: ScenarioFile) -> dict:
    """Fully explicit form: parsing it applies no defaults."""
    def without(d: dict, *keys) -> dict:
        return {k: v for k, v in d.items() if k not in keys}

    out = {
        "name": s.name,
        "profiles": [dict({"id": k}, **to_dict(p)) for k, p in s.profiles.items()],
        "carriers": [dict({"id": k}, **without(to_dict(c), "name"))
                     for k, c in s.carriers.items()],
        "deployment": to_dict(s.deployment),
        "power": to_dict(s.power),
    }
    if s.bwp is not None:
        out["bwp"] = to_dict(s.bwp)
    out["access"] = dict(to_dict(s.access.config), devices=s.access.devices,
                         redcap_fraction=s.access.redcap_fraction, seed=s.access.seed)
    if s.capacity is not None:
        cap = s.capacity
        out["capacity"] = dict(without(to_dict(cap.scenario), "redcap_fraction"),
                               embb_profile=cap.embb_profile, redcap_profile=cap.redcap_profile,
                               fractions=list(cap.fractions))
    if s.linkbudget is not None:
        out["linkbudget"] = to_dict(s.linkbudget)
    if s.requirements is not None:
        use_cases = []
        for entry in s.requirements.use_cases:
            r = entry.requirement
            item = {"use_case": r.name.value, "variant": r.variant}
            for f in fields(UseCaseRequirement):
                if f.name not in ("name", "variant"):
                    value = getattr(r, f.name)
                    item[f.name] = _interval(value) if f.name in _INTERVALS else value
            if entry.operating_point is not None:
                item["operating_point"] = to_dict(entry.operating_point)
            use_cases.append(item)
        out["requirements"] = {"profile": s.requirements.profile,
                               "carrier": s.requirements.carrier, "use_cases": use_cases}
    out["output"] = to_dict(s.output)
    return out


def serialize_scenario(s: ScenarioFile) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def load_scenario(path) -> ScenarioFile:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
