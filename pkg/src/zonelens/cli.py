"""Command-line interface for the platform.

Subcommands: `lens synth`/`lens slice` (field export and cross-sections),
`trace` (ray bundles through the lens), `analyze` (coverage report),
`sim` (offline frame dump), `run` (fusion + tracking pipeline, optionally
serving the live stream), and `replay` (recompute events from a log or a
frame dump).  Exit codes: 0 success, 1 usage, 2 config/scenario parse,
3 runtime failure; failures emit one JSON error line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import coverage as cov
from . import lens as lens_mod
from . import raytrace as rt
from .config import (PlatformConfig, Scenario, load_config, load_scenario)
from .errors import ConfigError, ScenarioError, ZonelensError
from .pipeline import (LivePipeline, dumps_record, dump_frames,
                       process_frame_dump, read_log, replay_log, run_virtual)
from .service import StreamServer


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(exit_code: int, message: str):
    print(json.dumps({"kind": "error", "exit": exit_code, "message": message}),
          file=sys.stderr)


def build_parser() -> Parser:
    p = Parser(prog="zonelens", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    lens = sub.add_parser("lens", help="synthesize and export the lens field")
    lens_sub = lens.add_subparsers(dest="lens_command", required=True)
    synth = lens_sub.add_parser("synth", help="write the ASCII voxel export")
    synth.add_argument("--config", default=None)
    synth.add_argument("--out", required=True)
    slice_p = lens_sub.add_parser("slice", help="write one cross-section CSV")
    slice_p.add_argument("--config", default=None)
    slice_p.add_argument("--plane", required=True, choices=["x0", "y0", "z0"])
    slice_p.add_argument("--csv", required=True)

    trace = sub.add_parser("trace", help="trace a ray bundle through the lens")
    trace.add_argument("--config", default=None)
    trace.add_argument("--feed-angle", type=float, default=0.0)
    trace.add_argument("--rays", type=int, default=200)
    trace.add_argument("--cone", type=float, default=30.0)
    trace.add_argument("--step", type=float, default=rt.DEFAULT_STEP_MM)
    trace.add_argument("--classical", action="store_true",
                       help="use the analytic classical profile instead")
    trace.add_argument("--report", default=None)
    trace.add_argument("--polylines", default=None,
                       help="CSV of sample points for up to 20 rays")

    analyze = sub.add_parser("analyze", help="angular coverage report")
    analyze.add_argument("--config", default=None)
    analyze.add_argument("--distances", required=True,
                         help="comma-separated distances in meters")
    analyze.add_argument("--json", dest="json_out", default=None)

    sim = sub.add_parser("sim", help="dump the raw frame stream to an NPZ file")
    sim.add_argument("--config", default=None)
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--duration", type=float, default=None)

    run = sub.add_parser("run", help="run the live pipeline")
    run.add_argument("--config", default=None)
    run.add_argument("--scenario", required=True)
    run.add_argument("--lens", choices=["on", "off"], default=None)
    run.add_argument("--duration", type=float, default=None)
    run.add_argument("--out", default=None, help="event log path (JSON lines)")
    run.add_argument("--serve", default=None, metavar="ADDR",
                     help="stream records on host:port (implies --realtime)")
    run.add_argument("--realtime", action="store_true",
                     help="pace the wall clock instead of the virtual clock")

    replay = sub.add_parser("replay", help="recompute events from a log or dump")
    replay.add_argument("--log", default=None)
    replay.add_argument("--frames", default=None)
    replay.add_argument("--config", default=None)
    replay.add_argument("--out", default=None)
    return p


def _scenario_duration(scenario: Scenario, platform: PlatformConfig,
                       override) -> float:
    if override is not None:
        return override
    if scenario.duration_s is not None:
        return scenario.duration_s
    calibration = platform.fusion.calibration_n * platform.frame_rep_time_s
    if scenario.waypoints:
        return scenario.waypoints[-1].t + 25.0
    return calibration + 30.0


def cmd_lens(args) -> int:
    cfg = load_config(args.config)
    field = lens_mod.synthesize_field(cfg.lens)
    if args.lens_command == "synth":
        n = lens_mod.export_ascii(field, args.out)
        print(json.dumps({"kind": "lens_export", "voxels_exported": n,
                          "dims": list(field.dims), "path": args.out}))
        return 0
    section = lens_mod.cross_section(field, args.plane)
    lens_mod.write_cross_section_csv(section, args.csv)
    print(json.dumps({"kind": "lens_slice", "plane": section.plane,
                      "rows": len(section.row_coords),
                      "cols": len(section.col_coords), "path": args.csv}))
    return 0


def cmd_trace(args) -> int:
    cfg = load_config(args.config)
    radius = cfg.lens.radius_mm
    if args.classical:
        medium = rt.LuneburgProfile(radius)
    else:
        medium = rt.VoxelMedium(lens_mod.synthesize_field(cfg.lens))
    feed, boresight = rt.sector_feed(radius, args.feed_angle)
    stats, exits = rt.trace_bundle(medium, feed, args.cone, args.rays,
                                   step=args.step, return_exits=True)
    deviation = math.degrees(math.acos(float(np.clip(
        stats.mean_exit_direction @ boresight, -1.0, 1.0))))
    report = {
        "kind": "trace_report",
        "medium": "classical" if args.classical else "modified",
        "backend": rt.active_backend(),
        "feed_angle_deg": args.feed_angle,
        "cone_half_angle_deg": args.cone,
        "n_rays": args.rays,
        "boresight": [round(v, 9) for v in boresight],
        "mean_exit_direction": [float(v) for v in stats.mean_exit_direction],
        "deviation_from_boresight_deg": deviation,
        "angular_spread_rms_deg": stats.angular_spread_rms_deg,
        "trapped_fraction": stats.trapped_fraction,
    }
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    print(json.dumps(report))
    if args.polylines:
        n_poly = min(args.rays, 20)
        dirs = rt.cone_directions(-feed / np.linalg.norm(feed), args.cone, n_poly)
        with open(args.polylines, "w") as fh:
            fh.write("ray,path_length_mm,x_mm,y_mm,z_mm\n")
            for i in range(n_poly):
                path = rt.trace_ray(medium, rt.RayState(feed, dirs[i]),
                                    step=args.step)
                for s in path.samples:
                    fh.write(f"{i},{s.path_length:.4f},{s.position[0]:.4f},"
                             f"{s.position[1]:.4f},{s.position[2]:.4f}\n")
    return 0


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    try:
        distances = [float(tok) for tok in args.distances.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --distances: {exc}") from None
    if not distances:
        raise UsageError("--distances must list at least one value")
    report = cov.coverage_report(cfg.coverage, distances)
    header = f"{'D (m)':>8} {'alpha':>8} {'2*alpha':>8} {'gap-free':>9} {'regime':>13}"
    print(header)
    print("-" * len(header))
    for row in report.rows:
        print(f"{row.distance_m:8.3f} {row.half_angle_deg:7.2f}° "
              f"{row.full_angle_deg:7.2f}° {str(row.gap_free):>9} "
              f"{row.regime:>13}")
    print(f"beam-edge gap: {report.gap_deg:.1f}°; body extent keeps "
          f"coverage gap-free out to {report.min_gapfree_distance_m:.3f} m")
    for note in report.notes:
        print("note: " + note)
    if args.json_out:
        payload = json.dumps(report.as_dict(), indent=2)
        if args.json_out == "-":
            print(payload)
        else:
            with open(args.json_out, "w") as fh:
                fh.write(payload + "\n")
    return 0


def cmd_sim(args) -> int:
    cfg = load_config(args.config)
    scenario = load_scenario(args.scenario)
    duration = _scenario_duration(scenario, cfg, args.duration)
    meta = dump_frames(cfg, scenario, duration, args.out)
    print(json.dumps({"kind": "sim_summary", "path": args.out, **meta}))
    return 0


def _config_message(cfg: PlatformConfig, lens_on: bool) -> dict:
    return {
        "kind": "config",
        "n_zones": len(cfg.radars),
        "zones": [r.zone for r in cfg.radars],
        "boresights_deg": [r.boresight_deg for r in cfg.radars],
        "frame_rep_time": cfg.frame_rep_time_s,
        "lens_on": lens_on,
        "room": {"x_min": cfg.room.x_min, "x_max": cfg.room.x_max,
                 "y_min": cfg.room.y_min, "y_max": cfg.room.y_max},
    }


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    scenario = load_scenario(args.scenario)
    if args.lens is not None:
        from dataclasses import replace
        scenario = replace(scenario, lens_on=args.lens == "on")
    duration = _scenario_duration(scenario, cfg, args.duration)
    realtime = args.realtime or args.serve is not None

    if not realtime:
        result = run_virtual(cfg, scenario, duration, log_path=args.out)
        print(json.dumps({
            "kind": "run_summary", "mode": "virtual", "duration_s": duration,
            "messages": result.counters.messages,
            "snapshots": result.counters.snapshots,
            "alerts": result.counters.alerts,
            "drops": result.counters.drops,
            "log": args.out,
        }))
        return 0

    server = None
    pipeline = LivePipeline(cfg, scenario, log_path=args.out)
    if args.serve is not None:
        server = StreamServer(
            args.serve, _config_message(cfg, scenario.lens_on),
            on_steer=pipeline.steer,
            on_diagnostic=lambda ev, detail: pipeline.log.append(
                {"kind": "diagnostics", "event": ev, "t": pipeline.now(),
                 "detail": detail}),
        ).start()
        pipeline.broadcast = server.broadcast
        print(json.dumps({"kind": "serving", "address": server.address}),
              flush=True)
    try:
        pipeline.run_for(duration)
    except KeyboardInterrupt:
        pipeline.stop()
    finally:
        if server is not None:
            server.close()
    print(json.dumps({
        "kind": "run_summary", "mode": "live", "duration_s": duration,
        "messages": pipeline.counters.messages,
        "alerts": pipeline.counters.alerts,
        "drops": pipeline.counters.drops,
        "median_latency_s": pipeline.median_latency_s(),
        "log": args.out,
    }))
    return 0


def cmd_replay(args) -> int:
    if (args.log is None) == (args.frames is None):
        raise UsageError("replay needs exactly one of --log or --frames")
    if args.log is not None:
        records = read_log(args.log)
        replayed = replay_log(records)
        # the reproducibility contract is on tracker events; snapshots from a
        # wall-clock run regroup differently and are not compared
        def tracker_events(recs):
            return [dumps_record(r) for r in recs
                    if r["kind"] in ("tracker", "alert")]

        matches = tracker_events(replayed) == tracker_events(records)
    else:
        cfg = load_config(args.config)
        replayed = process_frame_dump(args.frames, cfg)
        matches = None
    if args.out:
        with open(args.out, "w") as fh:
            for rec in replayed:
                fh.write(dumps_record(rec) + "\n")
    summary = {"kind": "replay_summary", "records": len(replayed)}
    if matches is not None:
        summary["matches_original"] = matches
    print(json.dumps(summary))
    if matches is False:
        _emit_error(3, "replay diverged from the logged records")
        return 3
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "lens":
            return cmd_lens(args)
        if args.command == "trace":
            return cmd_trace(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "sim":
            return cmd_sim(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "replay":
            return cmd_replay(args)
        raise UsageError(f"unknown command {args.command}")
    except UsageError as exc:
        _emit_error(1, str(exc))
        return 1
    except (ConfigError, ScenarioError) as exc:
        _emit_error(2, str(exc))
        return 2
    except ZonelensError as exc:
        _emit_error(3, str(exc))
        return 3
    except OSError as exc:
        _emit_error(3, str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
