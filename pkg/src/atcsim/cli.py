"""Operator command line: serve, validate, plan, replay, headless."""

from __future__ import annotations

import argparse
import logging
import os
import signal
import sys

from . import __version__
from .eventlog import CorruptLog, ScenarioMismatch, replay_log
from .headless import (
    PilotScript,
    UnknownScriptCallsign,
    duration_to_ticks,
    parse_pilot_script,
    run_headless,
)
from .planning import plan_sessions
from .scenario import parse_scenario, validate_scenario
from .server import DEFAULT_PORT, HostServer
from .session import InvalidScenarioError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_INPUT = 2
EXIT_BAD_SCENARIO_DIR = 3
EXIT_USAGE = 4

logger = logging.getLogger("atcsim")


def _default_port() -> int:
    raw = os.environ.get("ATCSIM_PORT", "")
    try:
        return int(raw) if raw else DEFAULT_PORT
    except ValueError:
        return DEFAULT_PORT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atcsim", description="Distributed ATC simulation training host and tools."
    )
    parser.add_argument("--version", action="version", version=f"atcsim {__version__}")
    parser.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"]
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the exercise host")
    serve.add_argument("--port", type=int, default=_default_port())
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--scenario-dir", default=".")
    serve.add_argument("--blocks", type=int, default=1)
    serve.add_argument("--log-dir", default="logs")

    validate = sub.add_parser("validate", help="lint a scenario file")
    validate.add_argument("scenario_file")

    plan = sub.add_parser("plan", help="split a roster into training sessions")
    plan.add_argument("--students", type=int, required=True)
    plan.add_argument("--capacity", type=int, default=6)
    plan.add_argument("--duration", type=float, default=3600.0, help="exercise seconds")
    plan.add_argument("--stations", type=int, default=2, help="controller stations per session")

    replay = sub.add_parser("replay", help="re-run a recording offline")
    replay.add_argument("logfile")
    replay.add_argument("--scenario", required=True)
    replay.add_argument("--verify-digests", action="store_true")

    headless = sub.add_parser("headless", help="run a scripted exercise without a network")
    headless.add_argument("--scenario", required=True)
    headless.add_argument("--pilot-script", default="")
    headless.add_argument("--duration", type=float, default=0.0, help="seconds; 0 = full exercise")
    headless.add_argument("--log", default="headless.atclog", help="recording to write")

    return parser


def cmd_serve(args) -> int:
    if args.blocks < 1:
        print("serve: --blocks must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    if not 0 < args.port < 65536:
        print(f"serve: port {args.port} out of range", file=sys.stderr)
        return EXIT_USAGE
    try:
        server = HostServer(
            port=args.port,
            scenario_dir=args.scenario_dir,
            blocks=args.blocks,
            host=args.host,
            log_dir=args.log_dir,
        )
    except NotADirectoryError as exc:
        print(f"serve: {exc}", file=sys.stderr)
        return EXIT_BAD_SCENARIO_DIR
    try:
        server.start()
    except OSError as exc:
        print(f"serve: cannot bind port {args.port}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    for signum in (signal.SIGINT, signal.SIGTERM):
        signal.signal(signum, lambda *_: server.stop())
    server.wait()
    server.stop()
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        with open(args.scenario_file, "rb") as fh:
            scenario = parse_scenario(fh.read())
    except OSError as exc:
        print(f"validate: cannot read {args.scenario_file}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"validate: {args.scenario_file}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    issues = validate_scenario(scenario)
    for issue in issues:
        print(issue)
    return EXIT_FAILURE if any(i.severity == "ERROR" for i in issues) else EXIT_OK


def cmd_plan(args) -> int:
    if args.students < 0:
        print("plan: --students must be >= 0", file=sys.stderr)
        return EXIT_BAD_INPUT
    if args.capacity < 3:
        print("plan: --capacity must be >= 3 (controller, coordinator, pilot)", file=sys.stderr)
        return EXIT_BAD_INPUT
    students = [f"S{i + 1:02d}" for i in range(args.students)]
    plan = plan_sessions(
        students, args.capacity, duration_s=args.duration, controller_stations=args.stations
    )
    print(f"sessions: {plan.session_count}")
    for session in plan.sessions:
        print(f"session {session.session_index}: {' '.join(session.students)}")
        for slot in session.rotation:
            seats = " ".join(f"{seat}={student}" for seat, student in slot.assignments)
            print(f"  slot {slot.slot_index + 1} [{slot.start_s:.0f}-{slot.end_s:.0f}s]: {seats}")
        if session.rotation.infeasible:
            print("  warning: not every student gets the controller seat")
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        with open(args.scenario, "rb") as fh:
            scenario = parse_scenario(fh.read())
    except (OSError, ValueError) as exc:
        print(f"replay: bad scenario file: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        result = replay_log(args.logfile, scenario, verify_digests=args.verify_digests)
    except ScenarioMismatch as exc:
        print(f"replay: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except CorruptLog as exc:
        print(f"replay: corrupt log: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"replay: cannot read {args.logfile}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    print(f"final_digest: {result.final_digest}")
    print(f"ticks: {result.ticks}")
    print(f"separation_events: {result.separation_count}")
    if args.verify_digests:
        if result.mismatch is not None:
            m = result.mismatch
            print(
                f"digest mismatch at tick {m.tick_index}: "
                f"recorded {m.recorded[:12]}.. computed {m.computed[:12]}.."
            )
            return EXIT_FAILURE
        print(f"digests: {result.checkpoints} checkpoints verified")
    return EXIT_OK


def cmd_headless(args) -> int:
    try:
        with open(args.scenario, "rb") as fh:
            scenario = parse_scenario(fh.read())
    except (OSError, ValueError) as exc:
        print(f"headless: bad scenario file: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    script = PilotScript()
    if args.pilot_script:
        try:
            with open(args.pilot_script, "r", encoding="utf-8") as fh:
                script = parse_pilot_script(fh.read())
        except OSError as exc:
            print(f"headless: cannot read script: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
        except ValueError as exc:
            print(f"headless: bad script: {exc}", file=sys.stderr)
            return EXIT_FAILURE

    duration_ticks = None
    if args.duration > 0:
        duration_ticks = duration_to_ticks(args.duration, scenario.tick_seconds)
    try:
        result = run_headless(scenario, script, args.log, duration_ticks=duration_ticks)
    except UnknownScriptCallsign as exc:
        print(f"headless: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except InvalidScenarioError as exc:
        print(f"headless: scenario does not validate: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    print(f"final_digest: {result.final_digest}")
    print(f"ticks: {result.ticks}")
    print(f"separation_events: {result.separation_count}")
    print(f"log: {result.log_path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "serve": cmd_serve,
        "validate": cmd_validate,
        "plan": cmd_plan,
        "replay": cmd_replay,
        "headless": cmd_headless,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
