"""Command-line front end: one scenario file drives every analysis.

Reports go to ``output.path`` in the scenario (``-`` is stdout) unless
``--out`` overrides it. Errors are written to stderr as a single JSON
object and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .access import AccessConfig, IdMethod, simulate_access, stats_row
from .bwp import (CarrierLayout, InfeasibleLayoutError, PrbRange, Release17Features,
                  plan_layout, plan_redcap_bwp, render_grid)
from .capacity import REPORT_COLUMNS, Scheduler, report_rows, run_capacity_sim
from .datarate import CapabilityExceededError, peak_rate
from .linkbudget import (LinkTables, build_channel_set, coverage_recovery, default_tables)
from .model import (BUILTIN_REQUIREMENTS, DeploymentKind, Direction, ProfileKind,
                    builtin_deployment, builtin_profile, check_requirements, to_dict)
from .power import (BASELINE_DRX_CYCLE_S, DrxConfig, PowerModel, RrcState, TrafficPattern,
                    battery_lifetime, lifetime_ratio)
from .scenario import (OutputFormat, ScenarioError, ScenarioFile, load_scenario)

SEED_ENV = "REDCAP_DIM_SEED"


class CliError(Exception):
    """Failure reported as error JSON; ``details`` is merged into it."""

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.details = details or {}


# ---------------------------------------------------------------------------
# Formatting


def fmt_number(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".6g")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_number(value)
    return str(value)


def rows_to_csv(rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> str:
    columns = list(columns or (rows[0] if rows else []))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def round6(obj):
    """Floats to 6 significant digits, recursively; infinities become strings."""
    if isinstance(obj, float):
        if math.isinf(obj) or math.isnan(obj):
            return fmt_number(obj) if not math.isnan(obj) else None
        return float(format(obj, ".6g"))
    if isinstance(obj, dict):
        return {k: round6(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round6(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(round6(obj), indent=2, sort_keys=True) + "\n"


class Emitter:
    """Collects report files, then writes them to a directory or stdout."""

    def __init__(self, path: str, fmt: OutputFormat):
        self.path = path
        self.format = fmt
        self.files: list[tuple[str, str]] = []

    def table(self, stem: str, rows: Sequence[dict], columns: Optional[Sequence[str]] = None):
        if self.format is OutputFormat.JSON:
            cols = list(columns or (rows[0] if rows else []))
            self.add(f"{stem}.json", dump_json([{c: r[c] for c in cols} for r in rows]))
        else:
            self.add(f"{stem}.csv", rows_to_csv(rows, columns))

    def add(self, name: str, text: str) -> None:
        self.files.append((name, text))

    def flush(self, stdout) -> None:
        if self.path == "-":
            for name, text in self.files:
                if len(self.files) > 1:
                    stdout.write(f"==> {name} <==\n")
                stdout.write(text)
            return
        out = Path(self.path)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files:
            with open(out / name, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


# ---------------------------------------------------------------------------
# Analyses


def resolve_seed(flag: Optional[int], scn: ScenarioFile, path: str, file_value: int) -> int:
    """Flag, then an explicit file value, then $REDCAP_DIM_SEED, then the default."""
    if flag is not None:
        return flag
    if scn.was_given(path):
        return file_value
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"{SEED_ENV}={env!r} is not an integer") from None
    return file_value


def datarate_rows(scn: ScenarioFile, profiles: Optional[Sequence[str]] = None,
                  carriers: Optional[Sequence[str]] = None) -> list[dict]:
    rows = []
    for pid in profiles or list(scn.profiles):
        profile = _profile(scn, pid)
        for cid in carriers or list(scn.carriers):
            carrier = _carrier(scn, cid)
            for direction in Direction:
                try:
                    rate, status = peak_rate(profile, carrier, direction), "ok"
                except CapabilityExceededError as exc:
                    rate, status = None, f"exceeds:{exc.limit}"
                rows.append({"profile": pid, "carrier": cid, "direction": direction.value,
                             "duplex": carrier.duplex_mode.value, "n_prb": carrier.n_prb,
                             "rate_mbps": rate, "status": status})
    return rows


DATARATE_COLUMNS = ("profile", "carrier", "direction", "duplex", "n_prb", "rate_mbps", "status")
BATTERY_COLUMNS = ("cycle_s", "iat_s", "lifetime_h", "lifetime_ratio_vs_baseline")


def battery_rows(model: PowerModel, state: RrcState, cycles: Sequence[float],
                 iats: Sequence[float], arrival_process) -> list[dict]:
    rows = []
    for cycle in cycles:
        drx = DrxConfig.for_cycle(state, cycle)
        for iat in iats:
            traffic = TrafficPattern(iat, arrival_process)
            rows.append({"cycle_s": float(cycle), "iat_s": float(iat),
                         "lifetime_h": battery_lifetime(model, drx, traffic),
                         "lifetime_ratio_vs_baseline": lifetime_ratio(model, state, cycle, traffic),
                         "dl_latency_s": drx.dl_latency_s})
    return rows


LINKBUDGET_COLUMNS = ("channel", "direction", "mil_db", "recovery_db", "bottleneck",
                      "needs_recovery")


def _tables(scn: ScenarioFile, base_dir: Path) -> LinkTables:
    lb = scn.linkbudget
    if lb.channels_csv is None:
        return default_tables()
    return LinkTables.from_csv(base_dir / lb.channels_csv, base_dir / lb.snr_csv)


def linkbudget_rows(scn: ScenarioFile, redcap_id: str, reference_id: str,
                    trp_dbm: Optional[float], efficiency_penalty: bool,
                    panel_reduction: bool, base_dir: Path) -> list[dict]:
    deployment = scn.deployment
    if deployment.name is DeploymentKind.Custom:
        raise CliError("a Custom deployment has no link tables; use a preset deployment name")
    if trp_dbm is not None:
        deployment = deployment.with_trp(trp_dbm)
    tables = _tables(scn, base_dir)
    redcap = build_channel_set(deployment, _profile(scn, redcap_id), tables,
                               efficiency_penalty=efficiency_penalty,
                               apply_panel_reduction=panel_reduction)
    reference = build_channel_set(deployment, _profile(scn, reference_id), tables)
    return [{"channel": e.channel.value, "direction": e.direction.value, "mil_db": e.mil_db,
             "recovery_db": e.recovery_db, "bottleneck": e.is_bottleneck,
             "needs_recovery": e.flagged}
            for e in coverage_recovery(redcap, reference)]


def carrier_layout(scn: ScenarioFile, carrier_id: str) -> CarrierLayout:
    b = scn.bwp
    base = CarrierLayout.from_carrier(_carrier(scn, carrier_id), b.ssb_prbs, b.coreset0_prbs)
    ssb = PrbRange(*b.ssb_prb_range) if b.ssb_prb_range else base.ssb_prb_range
    coreset = PrbRange(*b.coreset0_prb_range) if b.coreset0_prb_range else base.coreset0_prb_range
    return replace(base, ssb_prb_range=ssb, coreset0_prb_range=coreset)


def bwp_plan(scn: ScenarioFile, profile_id: str, carrier_id: str,
             features: Release17Features) -> tuple[dict, str]:
    layout = carrier_layout(scn, carrier_id)
    profile = _profile(scn, profile_id)
    try:
        plan = plan_redcap_bwp(layout, profile, features, scn.bwp.pucch_prbs)
    except InfeasibleLayoutError as exc:
        raise CliError("no RedCap BWP layout satisfies every rule",
                       {"binding_rules": sorted(exc.binding)}) from None
    doc = {
        "profile": profile_id,
        "carrier": carrier_id,
        "n_prb": layout.n_prb,
        "ssb_prb_range": layout.ssb_prb_range.as_list(),
        "coreset0_prb_range": layout.coreset0_prb_range.as_list(),
        "features": to_dict(features),
        "ul": {"prb_range": plan.ul.prb_range.as_list(), "placement": plan.placement[0],
               "pucch_hopping": plan.ul.pucch_hopping.value},
        "dl": {"prb_range": plan.dl.prb_range.as_list(), "placement": plan.placement[1],
               "contains_ssb_coreset0": plan.dl.contains_ssb_coreset0},
        "fragmentation": to_dict(plan.fragmentation),
    }
    grid = render_grid(layout, plan_layout(plan, layout), scn.bwp.pucch_prbs) + "\n"
    return doc, grid


def access_population(n: int, redcap_fraction: float):
    """Deterministic mix: device i is RedCap when the running share crosses an integer."""
    redcap = builtin_profile(ProfileKind.RedCapBaselineFr1)
    reference = builtin_profile(ProfileKind.ReferenceNrFr1)
    return [redcap if math.floor((i + 1) * redcap_fraction) > math.floor(i * redcap_fraction)
            else reference for i in range(n)]


def requirement_verdicts(scn: ScenarioFile) -> dict:
    req = scn.requirements
    profile, carrier = _profile(scn, req.profile), _carrier(scn, req.carrier)
    dl = peak_rate(profile, carrier, Direction.DL)
    ul = peak_rate(profile, carrier, Direction.UL)
    verdicts = []
    for entry in req.use_cases:
        lifetime = latency = None
        if entry.operating_point is not None:
            op = entry.operating_point
            traffic = TrafficPattern(op.iat_s, scn.power.arrival_process)
            lifetime = battery_lifetime(scn.power.model, op.drx(), traffic)
            latency = op.drx().dl_latency_s * 1000.0
        report = check_requirements(entry.requirement, dl, ul, lifetime, latency)
        verdicts.append({"requirement": report.requirement, "passed": report.passed,
                         "operating_point": to_dict(entry.operating_point),
                         "dimensions": [to_dict(d) for d in report.dimensions]})
    return {"profile": req.profile, "carrier": req.carrier,
            "achieved": {"dl_rate_mbps": dl, "ul_rate_mbps": ul}, "verdicts": verdicts}


def _profile(scn: ScenarioFile, ref: str):
    try:
        return scn.profile(ref)
    except ValueError:
        raise CliError(f"unknown profile {ref!r}") from None


def _carrier(scn: ScenarioFile, ref: str):
    try:
        return scn.carrier(ref)
    except KeyError:
        raise CliError(f"unknown carrier {ref!r}") from None


def _require(scn: ScenarioFile, section: str):
    value = getattr(scn, section)
    if value is None:
        raise CliError(f"the scenario has no {section} section and none can be defaulted "
                       f"(no matching profile or carrier)")
    return value


# ---------------------------------------------------------------------------
# Subcommands


def cmd_datarate(args, scn, out: Emitter, base_dir: Path) -> None:
    out.table("datarate", datarate_rows(scn, args.profile, args.carrier), DATARATE_COLUMNS)


def cmd_battery(args, scn, out: Emitter, base_dir: Path) -> None:
    p = scn.power
    state = RrcState(args.state) if args.state else p.rrc_state
    rows = battery_rows(p.model, state, args.cycles or p.cycles_s, args.iats or p.iat_s,
                        p.arrival_process)
    out.table("battery", rows, BATTERY_COLUMNS)


def cmd_linkbudget(args, scn, out: Emitter, base_dir: Path) -> None:
    lb = _require(scn, "linkbudget")
    trp = args.trp if args.trp is not None else lb.trp_dbm
    rows = linkbudget_rows(scn, args.profile or lb.redcap_profile,
                           args.reference or lb.reference_profile, trp,
                           _pick(args.efficiency_penalty, lb.efficiency_penalty),
                           _pick(args.panel_reduction, lb.apply_panel_reduction), base_dir)
    out.table("linkbudget", rows, LINKBUDGET_COLUMNS)


def _pick(flag, file_value):
    return file_value if flag is None else flag


def cmd_bwp(args, scn, out: Emitter, base_dir: Path) -> None:
    b = _require(scn, "bwp")
    features = Release17Features(
        _pick(args.separate_initial_bwp, b.features.separate_initial_bwp),
        _pick(args.hopping_disable_allowed, b.features.hopping_disable_allowed),
        _pick(args.dl_bwp_without_ssb_allowed, b.features.dl_bwp_without_ssb_allowed))
    doc, grid = bwp_plan(scn, args.profile or b.profile, args.carrier or b.carrier, features)
    out.add("bwp.json", dump_json(doc))
    out.add("bwp_grid.txt", grid)


def cmd_access(args, scn, out: Emitter, base_dir: Path) -> None:
    a = scn.access
    cfg = a.config
    if args.id_method is not None:
        cfg = replace(cfg, id_method=IdMethod.parse(args.id_method))
    if args.barred is not None:
        cfg = replace(cfg, redcap_barred=args.barred)
    n = args.devices if args.devices is not None else a.devices
    fraction = args.redcap_fraction if args.redcap_fraction is not None else a.redcap_fraction
    if n < 1 or not 0.0 <= fraction <= 1.0:
        raise CliError("--devices must be ≥ 1 and --redcap-fraction in [0, 1]")
    seed = resolve_seed(args.seed, scn, "access.seed", a.seed)
    outcomes, stats = simulate_access(access_population(n, fraction), cfg, seed)
    out.add("access_outcomes.json",
            dump_json({"outcomes": to_dict(outcomes), "aggregate": to_dict(stats)}))
    out.add("access_aggregate.csv", rows_to_csv([stats_row(stats)]))


def _capacity_section(args, scn):
    c = _require(scn, "capacity")
    changes = {}
    if args.scheduler is not None:
        changes["scheduler"] = Scheduler(args.scheduler)
    if args.drops is not None:
        changes["drops"] = args.drops
    changes["seed"] = resolve_seed(args.seed, scn, "capacity.seed", c.scenario.seed)
    fractions = tuple(args.fractions) if args.fractions else c.fractions
    try:
        return replace(c, scenario=replace(c.scenario, **changes), fractions=fractions)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def capacity_tables(section) -> list[tuple[float, list[dict]]]:
    return [(f, report_rows(run_capacity_sim(section.at(f)))) for f in section.fractions]


def cmd_capacity(args, scn, out: Emitter, base_dir: Path) -> None:
    for fraction, rows in capacity_tables(_capacity_section(args, scn)):
        out.table(f"capacity_f{fraction:g}", rows, REPORT_COLUMNS)


def cmd_report(args, scn, out: Emitter, base_dir: Path) -> None:
    summary: dict = {"scenario": scn.name}
    summary["datarate"] = datarate_rows(scn)
    p = scn.power
    summary["lifetime"] = {"rrc_state": p.rrc_state.value,
                           "baseline_cycle_s": BASELINE_DRX_CYCLE_S,
                           "rows": battery_rows(p.model, p.rrc_state, p.cycles_s, p.iat_s,
                                                p.arrival_process)}
    if scn.linkbudget is not None:
        lb = scn.linkbudget
        fr = scn.deployment.frequency_range
        redcaps = [k for k, v in scn.profiles.items()
                   if v.is_redcap and v.frequency_range is fr] or [lb.redcap_profile]
        section = {}
        for pid in redcaps:
            rows = linkbudget_rows(scn, pid, lb.reference_profile, lb.trp_dbm,
                                   lb.efficiency_penalty, lb.apply_panel_reduction, base_dir)
            section[pid] = {"reference": lb.reference_profile, "rows": rows,
                            "needs_recovery": [r["channel"] for r in rows if r["needs_recovery"]]}
        summary["linkbudget"] = section
    if scn.bwp is not None:
        try:
            summary["bwp"] = bwp_plan(scn, scn.bwp.profile, scn.bwp.carrier, scn.bwp.features)[0]
        except CliError as exc:
            summary["bwp"] = {"infeasible": str(exc), **exc.details}
    if scn.requirements is not None:
        summary["requirements"] = requirement_verdicts(scn)
    if scn.was_given("access"):
        a = scn.access
        seed = resolve_seed(None, scn, "access.seed", a.seed)
        _, stats = simulate_access(access_population(a.devices, a.redcap_fraction), a.config, seed)
        summary["access"] = to_dict(stats)
    if scn.was_given("capacity") and not args.no_capacity:
        section = _capacity_section(argparse.Namespace(scheduler=None, drops=None, seed=None,
                                                       fractions=None), scn)
        summary["capacity"] = {f"{f:g}": rows for f, rows in capacity_tables(section)}
    out.add("report.json", dump_json(summary))


def cmd_presets(args, out: Emitter) -> None:
    doc = {
        "profiles": {k.value: to_dict(builtin_profile(k)) for k in ProfileKind},
        "deployments": {k.value: to_dict(builtin_deployment(k))
                        for k in DeploymentKind if k is not DeploymentKind.Custom},
        "requirements": [to_dict(r) for r in BUILTIN_REQUIREMENTS],
        "power_model": to_dict(PowerModel()),
        "access": to_dict(AccessConfig()),
    }
    out.add("presets.json", dump_json(doc))


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: {message}", {"usage": self.format_usage().strip()})


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="redcap-dim", description="RedCap device and network dimensioning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text, func):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help="output directory, or '-' for stdout (default: from file)")
        p.add_argument("--format", choices=[f.value for f in OutputFormat],
                       help="table format (default: from file)")
        p.set_defaults(func=func)
        return p

    p = command("datarate", "peak rate per (profile, carrier, direction)", cmd_datarate)
    p.add_argument("--profile", action="append", help="profile id (repeatable; default all)")
    p.add_argument("--carrier", action="append", help="carrier id (repeatable; default all)")

    p = command("battery", "battery lifetime over the (cycle, IAT) grid", cmd_battery)
    p.add_argument("--cycles", type=_floats, help="comma-separated DRX/eDRX cycles in s")
    p.add_argument("--iats", type=_floats, help="comma-separated inter-arrival times in s")
    p.add_argument("--state", choices=[s.value for s in RrcState])

    p = command("linkbudget", "per-channel MIL and coverage recovery", cmd_linkbudget)
    p.add_argument("--profile", help="RedCap profile id or preset")
    p.add_argument("--reference", help="reference profile id or preset")
    p.add_argument("--trp", type=float, help="UE total radiated power in dBm")
    p.add_argument("--efficiency-penalty", action=argparse.BooleanOptionalAction, default=None,
                   help="apply the RedCap antenna-efficiency penalty")
    p.add_argument("--panel-reduction", action=argparse.BooleanOptionalAction, default=None,
                   help="apply the smaller FR2 panel's array-gain loss")

    p = command("bwp", "RedCap initial BWP placement and PRB grid", cmd_bwp)
    p.add_argument("--profile", help="RedCap profile id")
    p.add_argument("--carrier", help="carrier id")
    for flag in ("separate-initial-bwp", "hopping-disable-allowed", "dl-bwp-without-ssb-allowed"):
        p.add_argument(f"--{flag}", action=argparse.BooleanOptionalAction, default=None)

    p = command("access-sim", "random-access walk-through with PRB accounting", cmd_access)
    p.add_argument("--id-method", choices=[m.value for m in IdMethod] + ["MsgA"])
    p.add_argument("--barred", action=argparse.BooleanOptionalAction, default=None,
                   help="RedCap barred in SIB1")
    p.add_argument("--devices", type=int)
    p.add_argument("--redcap-fraction", type=float)
    p.add_argument("--seed", type=int, help=f"falls back to the file, then ${SEED_ENV}")

    p = command("capacity-sim", "multi-cell DL capacity, one CSV per RedCap fraction",
                cmd_capacity)
    p.add_argument("--fractions", type=_floats, help="comma-separated RedCap fractions")
    p.add_argument("--scheduler", choices=[s.value for s in Scheduler])
    p.add_argument("--drops", type=int)
    p.add_argument("--seed", type=int, help=f"falls back to the file, then ${SEED_ENV}")

    p = command("report", "all applicable analyses plus use-case verdicts", cmd_report)
    p.add_argument("--no-capacity", action="store_true", help="skip the capacity study")

    p = sub.add_parser("presets", help="export every built-in preset as JSON",
                       description="export every built-in preset as JSON")
    p.add_argument("--out", default="-", help="output directory, or '-' for stdout")
    p.set_defaults(func=None)
    return parser


def _fail(stderr, command: Optional[str], exc: Exception, details: Optional[dict] = None) -> None:
    doc = {"error": type(exc).__name__, "subcommand": command, "message": str(exc)}
    doc.update(details or {})
    stderr.write(json.dumps(doc, sort_keys=True) + "\n")


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        if command == "presets":
            out = Emitter(args.out, OutputFormat.JSON)
            cmd_presets(args, out)
            out.flush(stdout)
            return 0
        scn = load_scenario(args.scenario)
        out = Emitter(args.out or scn.output.path,
                      OutputFormat(args.format) if args.format else scn.output.format)
        args.func(args, scn, out, Path(args.scenario).resolve().parent)
        out.flush(stdout)
        return 0
    except ScenarioError as exc:
        _fail(stderr, command, exc, {"issues": [to_dict(i) for i in exc.issues]})
        return 2
    except CliError as exc:
        _fail(stderr, command, exc, exc.details)
        return 2 if command is None or "usage" in exc.details else 1
    except (ValueError, KeyError, OSError) as exc:
        _fail(stderr, command, exc)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
