"""Command line front end.

    parkfusion sim run PATH        run a scenario, print the metrics document
    parkfusion sim validate PATH   parse and type-check a scenario
    parkfusion sim report PATH     run a scenario and write the report bundle
    parkfusion cloud serve         start the HTTP service (optionally durable)
"""

from __future__ import annotations

import argparse
import os
import sys
import threading

from .api import CloudApiServer
from .cloud import CloudConfig, CloudService, EventLog, replay_from_log
from .node import MODES
from .scenario import ScenarioError, load_scenario
from .sim import EmbeddedSink, HttpSink, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parkfusion")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="scenario simulation")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)

    run_p = sim_sub.add_parser("run", help="run a scenario and print metrics")
    run_p.add_argument("scenario", help="path to a scenario file")
    run_p.add_argument("--mode", choices=MODES, help="override the sensing mode for every space")
    run_p.add_argument("--cloud", metavar="URL", help="send telemetry to a live service instead of the embedded one")
    run_p.add_argument("--out", metavar="FILE", help="also write the metrics document here")

    val_p = sim_sub.add_parser("validate", help="check a scenario file")
    val_p.add_argument("scenario", help="path to a scenario file")

    rep_p = sim_sub.add_parser("report", help="run a scenario and render the report bundle")
    rep_p.add_argument("scenario", help="path to a scenario file")
    rep_p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    rep_p.add_argument("--mode", choices=MODES, help="override the sensing mode for every space")
    rep_p.add_argument("--cloud", metavar="URL", help="send telemetry to a live service instead of the embedded one")

    cloud = sub.add_parser("cloud", help="business service")
    cloud_sub = cloud.add_subparsers(dest="cloud_command", required=True)

    serve_p = cloud_sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--listen", default="127.0.0.1:0", metavar="HOST:PORT",
                         help="bind address; port 0 picks a free port (default %(default)s)")
    serve_p.add_argument("--log", metavar="FILE",
                         help="durable event log; replayed at startup when present")
    serve_p.add_argument("--sweep-period", type=float, default=5.0, metavar="SECONDS",
                         help="health/persistence sweep period (default %(default)s)")

    return parser


def _make_sink(args):
    if args.cloud:
        return HttpSink(args.cloud)
    return EmbeddedSink()


def _cmd_sim_run(args) -> int:
    scn = load_scenario(args.scenario)
    result = run_scenario(scn, mode_override=args.mode, sink=_make_sink(args))
    doc = result.metrics_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc)
    sys.stdout.write(doc)
    return 0


def _cmd_sim_validate(args) -> int:
    try:
        scn = load_scenario(args.scenario)
        # Building node configs catches bad overrides that parsing keeps raw.
        from .sim import SpaceEnvironment, build_node_config

        events_by_space = {s.space_id: [] for s in scn.spaces}
        for ev in scn.events:
            events_by_space[ev.space_id].append(ev)
        for spec in scn.spaces:
            build_node_config(spec, scn)
            SpaceEnvironment(spec.space_id, events_by_space[spec.space_id])
    except (OSError, ScenarioError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"ok: {len(scn.spaces)} spaces, {len(scn.events)} events, {scn.duration_ms} ms")
    return 0


def _cmd_sim_report(args) -> int:
    from .report import render_report

    scn = load_scenario(args.scenario)
    result = run_scenario(scn, mode_override=args.mode, sink=_make_sink(args))
    for path in render_report(result, args.out):
        print(path)
    return 0


def _parse_listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise SystemExit(f"--listen expects HOST:PORT, got {value!r}")
    return host, int(port)


def _cmd_cloud_serve(args) -> int:
    host, port = _parse_listen(args.listen)
    config = CloudConfig()
    if args.log and os.path.exists(args.log) and os.path.getsize(args.log) > 0:
        service, stats = replay_from_log(args.log, config)
        print(f"replayed {stats['entries']} events ({stats['errors']} skipped)", flush=True)
        service.log = EventLog(args.log)
    else:
        log = EventLog(args.log) if args.log else None
        service = CloudService(config=config, log=log)
    server = CloudApiServer(service, host=host, port=port)
    server.start(sweep_period_s=args.sweep_period or None)
    # The URL line is machine-read by tooling that spawns this process.
    print(f"listening on {server.url}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sim":
            if args.sim_command == "run":
                return _cmd_sim_run(args)
            if args.sim_command == "validate":
                return _cmd_sim_validate(args)
            if args.sim_command == "report":
                return _cmd_sim_report(args)
        if args.command == "cloud":
            if args.cloud_command == "serve":
                return _cmd_cloud_serve(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable command")


if __name__ == "__main__":
    sys.exit(main())
