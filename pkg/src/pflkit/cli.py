"""Command-line front end.

One binary, five subcommands:

    predict    permissible velocities / predicted impact forces for a
               contact scenario, standard and cover-extended side by side
    effmass    direction-dependent effective mass of a kinematic chain
    analyze    collision metrics for measured or simulated trace files
    simulate   run the 1-D collision simulator, write the trace, print metrics
    report     ingest a measurement corpus and emit the report tables

Exit codes: 0 success (a "no prediction" outcome is a success), 1 usage
error, 2 data error (unreadable or invalid inputs), 3 internal invariant
violation. The PFLKIT_CONFIG environment variable supplies a default
--scenario path for `predict`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import collision_sim, config_io, dataset_report, dynamics, pfl_model, trace_analysis

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

ENV_CONFIG = "PFLKIT_CONFIG"

_VARIANT_CHOICES = list(pfl_model.VARIANTS)

_DATA_ERRORS = (
    config_io.ConfigError,
    dataset_report.CorpusError,
    trace_analysis.TraceError,
    dynamics.ChainError,
    pfl_model.ModelError,
    collision_sim.SimError,
    collision_sim.SimulationUnstableError,
    OSError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pflkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("predict", help="velocity and force limits for a scenario")
    p.add_argument("--scenario", help=f"contact scenario file (default: ${ENV_CONFIG})")
    p.add_argument("--force", type=float, help="force limit in N; prints velocity limits")
    p.add_argument("--velocity", type=float, help="velocity in m/s; prints predicted forces")
    p.add_argument("--variant", choices=_VARIANT_CHOICES, help="restrict force prediction to one variant")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("effmass", help="effective mass of a chain along a direction")
    p.add_argument("--chain", required=True, help="chain description file")
    p.add_argument("--q", required=True, help="joint positions, comma separated")
    p.add_argument("--point", required=True, help="world contact point x,y,z")
    p.add_argument("--direction", required=True, help="world push direction x,y,z")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("analyze", help="collision metrics for trace files")
    p.add_argument("traces", nargs="+", help="trace files (time,force CSV or single column)")
    p.add_argument("--v0", type=float, help="approach velocity for mass estimation, m/s")
    p.add_argument("--sample-rate", type=float, help="sample rate for single-column traces, Hz")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("simulate", help="run the 1-D collision simulator")
    p.add_argument("--scenario", required=True, help="simulation scenario file")
    p.add_argument("--out", help="directory for the generated trace file")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("report", help="tables from a measurement corpus")
    p.add_argument("--corpus", required=True, help="corpus directory (manifest + traces)")
    p.add_argument("--out", required=True, help="output directory for report files")
    p.add_argument("--config", help="report configuration file")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        handler = {
            "predict": _cmd_predict,
            "effmass": _cmd_effmass,
            "analyze": _cmd_analyze,
            "simulate": _cmd_simulate,
            "report": _cmd_report,
        }[args.command]
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return handler(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - report, do not traceback-spam
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _scenario_path(args) -> str:
    if args.scenario:
        return args.scenario
    env = os.environ.get(ENV_CONFIG)
    if env:
        return env
    raise _UsageError(f"--scenario required (or set ${ENV_CONFIG})")


def _cmd_predict(args) -> int:
    scenario = config_io.load_contact_scenario(_scenario_path(args))
    if (args.force is None) == (args.velocity is None):
        raise _UsageError("give exactly one of --force or --velocity")
    if args.force is not None:
        v_ts = pfl_model.permissible_velocity(scenario, args.force, with_cover=False)
        v_mod = pfl_model.permissible_velocity(scenario, args.force, with_cover=True)
        if args.format == "json":
            print(json.dumps({
                "force_N": args.force,
                "velocity_ts15066_ms": v_ts,
                "velocity_modified_ms": v_mod,
            }, sort_keys=True))
        else:
            print(f"force limit        {args.force:g} N")
            print(f"TS 15066           {pfl_model.display_round(v_ts):.2f} m/s  (raw {v_ts:.6f})")
            print(f"modified TS 15066  {pfl_model.display_round(v_mod):.2f} m/s  (raw {v_mod:.6f})")
        return EXIT_OK
    variants = [args.variant] if args.variant else list(pfl_model.VARIANTS)
    results = {}
    for variant in variants:
        try:
            results[variant] = pfl_model.predicted_impact_force(
                scenario, args.velocity, variant
            )
        except pfl_model.ModelError:
            results[variant] = "n/a"  # e.g. transient variant on a constrained body
    if args.format == "json":
        # values: force in N, null for "no prediction", "n/a" where the
        # variant does not apply to this scenario
        print(json.dumps({
            "velocity_ms": args.velocity,
            "predicted_force_N": results,
        }, sort_keys=True))
    else:
        print(f"velocity           {args.velocity:g} m/s")
        for variant, value in results.items():
            if value is None:
                shown = "no prediction"
            elif isinstance(value, str):
                shown = value
            else:
                shown = f"{value:.1f} N"
            print(f"{variant:<18} {shown}")
    return EXIT_OK


def _parse_floats(text: str, name: str) -> list[float]:
    try:
        return [float(token) for token in text.split(",")]
    except ValueError:
        raise _UsageError(f"{name} must be comma-separated numbers") from None


def _cmd_effmass(args) -> int:
    chain = config_io.load_chain(args.chain)
    q = _parse_floats(args.q, "--q")
    point = _parse_floats(args.point, "--point")
    direction = _parse_floats(args.direction, "--direction")
    if len(point) != 3 or len(direction) != 3:
        raise _UsageError("--point and --direction need three components")
    mass = dynamics.effective_mass(chain, q, point, direction)
    if args.format == "json":
        print(json.dumps({"effective_mass_kg": None if np.isinf(mass) else mass}))
    elif np.isinf(mass):
        print("immobile along this direction (infinite effective mass)")
    else:
        print(f"effective mass     {mass:.4f} kg")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    for path in args.traces:  # input order is the output order
        trace = trace_analysis.load_trace(path, sample_rate=args.sample_rate)
        metrics = trace_analysis.compute_metrics(trace, v0=args.v0)
        if args.format == "json":
            print(trace_analysis.metrics_json_line(metrics, trace=str(path)))
            continue
        print(f"{path}:")
        print(f"  peak force        {metrics.peak_force:.2f} N at {metrics.peak_time:.4f} s")
        if metrics.phase1_duration is None:
            print("  phase-1 duration  undefined (no post-peak minimum)")
        else:
            print(f"  phase-1 duration  {metrics.phase1_duration:.4f} s")
        if metrics.clamping_force is not None:
            print(f"  clamping force    {metrics.clamping_force:.2f} N")
        print(f"  impulse to peak   {metrics.impulse_to_peak:.4f} N s")
        if metrics.estimated_mass is not None:
            print(f"  estimated mass    {metrics.estimated_mass:.3f} kg")
        print(f"  window maxima     {metrics.force_in_first_500ms_max:.2f} / "
              f"{metrics.force_after_500ms_max:.2f} N (T<0.5 s / T>0.5 s)")
        print(f"  collision type    {metrics.collision_type.value}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    scenario = config_io.load_sim_scenario(args.scenario)
    result = collision_sim.simulate(scenario)
    trace_path = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / (Path(args.scenario).stem + "_trace.csv")
        trace_analysis.save_trace(result.trace, trace_path)
    if len(result.trace) == 0:
        if args.format == "json":
            print(json.dumps({"trace": None, "note": "no contact above the onset threshold"}))
        else:
            print("empty contact: force never reached the onset threshold")
        return EXIT_OK
    metrics = trace_analysis.compute_metrics(
        result.trace, v0=scenario.initial_velocity or None
    )
    extra = {
        "trace": str(trace_path) if trace_path else None,
        "sim_peak_force_N": result.peak_force,
        "sim_energy_drift": result.max_energy_drift,
        "detection_time_s": result.detection_time,
    }
    if args.format == "json":
        print(trace_analysis.metrics_json_line(metrics, **extra))
    else:
        if trace_path:
            print(f"trace written to {trace_path}")
        print(f"  peak force        {metrics.peak_force:.2f} N at {metrics.peak_time:.4f} s")
        print(f"  impulse to peak   {metrics.impulse_to_peak:.4f} N s")
        print(f"  collision type    {metrics.collision_type.value}")
        if result.detection_time is not None:
            print(f"  detection at      {result.detection_time:.4f} s")
    return EXIT_OK


def _cmd_report(args) -> int:
    if args.config:
        settings = config_io.load_report_config(args.config)
    else:
        body = pfl_model.hand_back_region()
        settings = {
            "limit_first": body.max_force_transient,
            "limit_second": body.max_force_quasistatic,
            "references": {},
            "baselines": {},
            "aggregation": "worst",
        }
    ingested = dataset_report.ingest(args.corpus)
    for issue in ingested.issues:
        print(f"warning: {issue}", file=sys.stderr)
    if not ingested.records:
        if ingested.issues:
            raise dataset_report.CorpusError("corpus contains no valid records")
        print("empty corpus: nothing to report")
        return EXIT_OK
    written = dataset_report.write_report(
        args.out,
        ingested.records,
        settings["limit_first"],
        settings["limit_second"],
        references=settings["references"],
        baselines=settings["baselines"],
        aggregation=settings["aggregation"],
    )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
