"""Release gate: one test per shipped guarantee, each at its stated tolerance.

These tests restate the package's headline claims end to end, with scripted
clients standing in for the station UI.  Budgets are asserted, not aspired
to; a slow pass is a failure.
"""

from __future__ import annotations

import json
import math
import random
import threading
import time
from dataclasses import replace
from time import perf_counter

import pytest

from atcsim import cli
from atcsim import protocol as proto
from atcsim.planning import plan_sessions
from atcsim.scenario import parse_scenario
from atcsim.server import HostServer
from atcsim.sim import (
    AircraftState,
    Position,
    SeparationMinima,
    SimClock,
    WorldState,
    detect_conflicts,
    step_world,
)
from atcsim.session import SessionConfig, create_session

from helpers import (
    Keepalive,
    WsClient,
    aircraft,
    brute_force_conflicts,
    entry,
    healthz,
    make_scenario_doc,
    wait_for,
)


def test_session_arithmetic_matches_published_cohorts():
    t0 = perf_counter()
    for students, expected in ((30, 5), (60, 10), (100, 17)):
        roster = [f"S{i + 1:03d}" for i in range(students)]
        assert plan_sessions(roster, 6).session_count == expected
    assert perf_counter() - t0 < 1.0


def test_block_capacity_exactly_ten_ten_one():
    t0 = perf_counter()
    scenario = parse_scenario(
        json.dumps(make_scenario_doc(schedule=[entry("BAW123")], duration_s=600.0))
    )
    core = create_session("B1-s1", proto.BlockConfig(block_id="B1"), scenario, SessionConfig())

    def join(name, role):
        msg = proto.make_message(
            name,
            1,
            proto.Hello(client_name=name, desired_role=role, block_id="B1"),
            session_id="B1-s1",
        )
        return core.handle_message(msg)[0].message.payload

    for i in range(10):
        assert isinstance(join(f"ctl{i}", proto.Role.CONTROLLER), proto.Welcome)
    eleventh = join("ctl10", proto.Role.CONTROLLER)
    assert isinstance(eleventh, proto.Reject)
    assert eleventh.reason == proto.R_BLOCK_FULL

    for i in range(10):
        assert isinstance(join(f"plt{i}", proto.Role.PSEUDO_PILOT), proto.Welcome)
    assert join("plt10", proto.Role.PSEUDO_PILOT).reason == proto.R_BLOCK_FULL

    assert isinstance(join("sup0", proto.Role.SUPERVISOR), proto.Welcome)
    second = join("sup1", proto.Role.SUPERVISOR)
    assert isinstance(second, proto.Reject)
    assert second.reason == proto.R_BLOCK_FULL
    assert perf_counter() - t0 < 5.0


def test_tutor_attachment_is_a_partial_bijection():
    t0 = perf_counter()
    stations = [
        proto.StationId("B1", proto.StationKind.CONTROLLER_STN, i) for i in range(1, 11)
    ]
    tutors = [f"T{i:02d}" for i in range(1, 13)]
    rng = random.Random(0xA77AC4)
    rejections = 0

    for _ in range(1000):
        attachments: tuple[proto.TutorAttachment, ...] = ()
        for _ in range(40):
            if rng.random() < 0.65:
                tutor = rng.choice(tutors)
                station = rng.choice(stations)
                tutor_busy = any(a.tutor_id == tutor for a in attachments)
                station_taken = any(a.controller_station == station for a in attachments)
                if tutor_busy or station_taken:
                    with pytest.raises((proto.TutorBusyError, proto.AlreadyAttachedError)):
                        attach_tutor_checked(attachments, tutor, station)
                    rejections += 1
                else:
                    attachments = attach_tutor_checked(attachments, tutor, station)
            else:
                attachments = proto.detach_tutor(attachments, rng.choice(tutors))

            tutor_ids = [a.tutor_id for a in attachments]
            station_ids = [a.controller_station for a in attachments]
            assert len(set(tutor_ids)) == len(tutor_ids)
            assert len(set(station_ids)) == len(station_ids)

    assert rejections > 0
    assert perf_counter() - t0 < 10.0


def attach_tutor_checked(attachments, tutor, station):
    return proto.attach_tutor(attachments, tutor, station, station_occupied=True)


def test_mirror_reconstruction_never_diverges():
    t0 = perf_counter()
    rng = random.Random(0x3172F0)
    station = proto.StationId("B1", proto.StationKind.CONTROLLER_STN, 1)

    def random_row(name):
        return proto.PictureAircraft(
            callsign=name,
            x_nm=rng.uniform(-150, 150),
            y_nm=rng.uniform(-150, 150),
            alt_ft=rng.uniform(1000, 40000),
            heading_deg=rng.uniform(0, 359.9),
            ground_speed_kt=rng.uniform(120, 480),
        )

    frames = 0
    snapshots = 0
    for seq in range(1000):
        counter = 0
        current: list[proto.PictureAircraft] = []
        for _ in range(rng.randint(0, 25)):
            current.append(random_row(f"AC{counter}"))
            counter += 1

        sender_prev = None
        frames_since = 0
        receiver = proto.normalize_picture(())

        for _ in range(15):
            op = rng.random()
            if op < 0.35 or not current:
                current.append(random_row(f"AC{counter}"))
                counter += 1
            elif op < 0.55:
                current.pop(rng.randrange(len(current)))
            else:
                i = rng.randrange(len(current))
                current[i] = random_row(current[i].callsign)
            picture = proto.normalize_picture(current)

            if rng.random() < 0.15:
                sender_prev = None  # receiver asked for a resync

            frame = proto.make_mirror_frame(
                sender_prev, picture, frames_since, station, snapshot_interval=5
            )
            if frame.full_snapshot is not None:
                frames_since = 0
                snapshots += 1
            else:
                frames_since += 1
            sender_prev = picture

            receiver = proto.apply_mirror_frame(receiver, frame)
            frames += 1
            assert proto.picture_digest(receiver) == proto.picture_digest(picture)

    assert frames == 15000
    assert snapshots > 1000  # interval rollovers plus forced resyncs
    assert perf_counter() - t0 < 30.0


REPLAY_DOC = make_scenario_doc(
    schedule=[
        entry(f"AC{i}", x=30.0 * (i % 4) - 60.0, y=25.0 * (i // 4) - 25.0, heading=45 * i % 360)
        for i in range(8)
    ],
    duration_s=40.0,
    waypoints=[
        {"name": "ALPHA", "x_nm": 50.0, "y_nm": 50.0},
        {"name": "BRAVO", "x_nm": -60.0, "y_nm": 20.0},
    ],
)


def test_recorded_runs_replay_bit_exactly(tmp_path):
    t0 = perf_counter()
    scenario_path = tmp_path / "replaycase.json"
    scenario_path.write_text(json.dumps(REPLAY_DOC))
    rng = random.Random(0xD16E57)
    callsigns = [e["callsign"] for e in REPLAY_DOC["schedule"]]

    for run in range(20):
        lines = []
        for tick in sorted(rng.choices(range(1, 38), k=12)):
            cs = rng.choice(callsigns)
            verb = rng.choice(["FH", "C", "D", "SPD", "DCT"])
            arg = {
                "FH": str(rng.randrange(0, 360)),
                "C": str(rng.randrange(120, 200) * 100),
                "D": str(rng.randrange(30, 90) * 100),
                "SPD": str(rng.randrange(180, 420)),
                "DCT": rng.choice(["ALPHA", "BRAVO"]),
            }[verb]
            lines.append(f"{tick} {cs} {verb} {arg}")
        script_path = tmp_path / f"script{run}.txt"
        script_path.write_text("\n".join(lines) + "\n")
        log_path = tmp_path / f"run{run}.atclog"

        assert (
            cli.main(
                [
                    "headless",
                    "--scenario",
                    str(scenario_path),
                    "--pilot-script",
                    str(script_path),
                    "--log",
                    str(log_path),
                ]
            )
            == 0
        )
        assert (
            cli.main(
                ["replay", str(log_path), "--scenario", str(scenario_path), "--verify-digests"]
            )
            == 0
        )
    assert perf_counter() - t0 < 60.0


def test_conflict_detection_equals_brute_force():
    t0 = perf_counter()
    rng = random.Random(0xC0F11C7)
    minima = SeparationMinima(lateral_nm=5.0, vertical_ft=1000.0)

    for world_no in range(500):
        n = rng.randint(0, 200)
        fleet = []
        for k in range(n):
            spread = 30.0 if rng.random() < 0.5 else 150.0
            fleet.append(
                aircraft(
                    f"AC{k}",
                    x=rng.uniform(-spread, spread),
                    y=rng.uniform(-spread, spread),
                    alt=250.0 * rng.randint(32, 48),
                    heading=rng.uniform(0, 359.9),
                    speed=rng.uniform(150, 480),
                )
            )
        got = {e.pair for e in detect_conflicts(fleet, minima, tick_index=world_no)}
        assert got == brute_force_conflicts(fleet, minima)
    assert perf_counter() - t0 < 30.0


def test_kinematics_closed_form_and_turn_arithmetic():
    t0 = perf_counter()
    rng = random.Random(0x5E7B00)
    minima = SeparationMinima(5.0, 1000.0)

    # constant velocity: within 1e-9 NM of the closed form per tick
    for _ in range(300):
        h = rng.randrange(0, 1440) / 4.0
        speed = rng.uniform(60, 480)
        x0, y0 = rng.uniform(-50, 50), rng.uniform(-50, 50)
        world = WorldState(
            clock=SimClock(tick_seconds=1.0),
            aircraft=(aircraft("AC1", x=x0, y=y0, heading=h, speed=speed),),
        )
        ticks = rng.randint(1, 50)
        for _ in range(ticks):
            world, _ = step_world(world, minima)
        rad = math.radians(h)
        plane = world.aircraft[0]
        assert plane.position.x_nm == pytest.approx(
            x0 + ticks * speed / 3600.0 * math.sin(rad), abs=1e-9 * ticks
        )
        assert plane.position.y_nm == pytest.approx(
            y0 + ticks * speed / 3600.0 * math.cos(rad), abs=1e-9 * ticks
        )

    # turns arrive in exactly ceil(delta / 3 deg) one-second ticks
    for _ in range(300):
        start = rng.randrange(0, 1440) / 4.0
        target = rng.randrange(0, 1440) / 4.0
        diff = (target - start) % 360.0
        delta = min(diff, 360.0 - diff)
        plane = replace(aircraft("AC1", heading=start), cleared_heading_deg=target)
        world = WorldState(clock=SimClock(tick_seconds=1.0), aircraft=(plane,))
        ticks = 0
        while world.aircraft[0].heading_deg != target and ticks < 100:
            world, _ = step_world(world, minima)
            ticks += 1
        assert ticks == math.ceil(delta / 3.0)

    # altitude capture clamps without overshoot
    for _ in range(300):
        alt = rng.uniform(2000, 38000)
        cleared = rng.uniform(2000, 38000)
        plane = replace(aircraft("AC1", alt=alt), cleared_alt_ft=cleared)
        world = WorldState(clock=SimClock(tick_seconds=1.0), aircraft=(plane,))
        climbing = cleared >= alt
        for _ in range(40):
            world, _ = step_world(world, minima)
            now = world.aircraft[0].position.alt_ft
            if climbing:
                assert now <= cleared
            else:
                assert now >= cleared

    assert perf_counter() - t0 < 10.0


RECONNECT_DOC = make_scenario_doc(
    schedule=[entry("BAW123"), entry("DLH456", x=40.0, y=10.0, heading=200.0)],
    duration_s=600.0,
    tick_seconds=0.02,
)


def test_reconnection_inside_and_outside_grace(tmp_path):
    t0 = perf_counter()
    scen_dir = tmp_path / "scenarios"
    scen_dir.mkdir()
    (scen_dir / "fast.json").write_text(json.dumps(RECONNECT_DOC))
    srv = HostServer(
        port=0,
        scenario_dir=str(scen_dir),
        blocks=1,
        log_dir=str(tmp_path / "logs"),
        session_config=SessionConfig(
            heartbeat_timeout_ticks=20, grace_ticks=100, snapshot_interval=50
        ),
    )
    srv.start()
    opened = []
    loops: list[Keepalive] = []
    try:
        sup = WsClient(srv.port, "sup")
        opened.append(sup)
        sup.join(proto.Role.SUPERVISOR, scenario_name="fast")
        ctl = WsClient(srv.port, "ctl")
        opened.append(ctl)
        old_id = ctl.join(proto.Role.CONTROLLER, station_index=4).client_id
        loops.append(Keepalive(sup))
        ctl_loop = Keepalive(ctl)
        sup.send(proto.SupervisorCmd(verb="START"))
        time.sleep(0.5)

        ctl_loop.stop()
        ctl.close()  # departs with a fresh last-seen tick; grace is 100 ticks = 2 s
        time.sleep(1.0)

        sup.send(proto.SupervisorCmd(verb="PAUSE"))  # freeze state for an exact compare
        wait_for(lambda: srv.sessions["B1"].core.phase.value == "PAUSED")
        again = WsClient(srv.port, "ctl")
        opened.append(again)
        welcome = again.join(proto.Role.CONTROLLER, resume=old_id)
        assert welcome.client_id == old_id
        assert welcome.station.index == 4
        snap = again.recv_tag("STATE_SNAPSHOT").payload
        assert snap.picture_digest == proto.picture_digest(srv.sessions["B1"].core.picture())
        assert proto.picture_digest(snap.picture) == snap.picture_digest

        sup.send(proto.SupervisorCmd(verb="RESUME"))
        wait_for(lambda: srv.sessions["B1"].core.phase.value == "RUNNING")
        again.close()
        time.sleep(3.0)  # well past death plus the full grace window at 50 Hz

        late = WsClient(srv.port, "ctl")
        opened.append(late)
        late.send(
            proto.Hello(
                client_name="ctl",
                desired_role=proto.Role.CONTROLLER,
                block_id="B1",
                resume_client_id=old_id,
            )
        )
        assert late.recv_tag("REJECT").payload.reason == proto.R_GRACE_EXPIRED
    finally:
        for loop in loops:
            loop.stop()
        for c in opened:
            c.close()
        srv.stop()
    assert perf_counter() - t0 < 30.0


DESK_DOC = make_scenario_doc(
    schedule=[
        entry(
            f"AC{i:02d}",
            x=35.0 * (i % 5) - 70.0,
            y=30.0 * (i // 5) - 45.0,
            alt=10000.0 + 500.0 * i,
            heading=(37 * i) % 360,
            speed=250.0 + 10.0 * i,
        )
        for i in range(20)
    ],
    duration_s=120.0,
    tick_seconds=1.0,
)


def test_desk_scale_block_runs_inside_tick_budget(tmp_path):
    scen_dir = tmp_path / "scenarios"
    scen_dir.mkdir()
    (scen_dir / "desk.json").write_text(json.dumps(DESK_DOC))
    srv = HostServer(
        port=0, scenario_dir=str(scen_dir), blocks=1, log_dir=str(tmp_path / "logs")
    )
    srv.start()
    clients: list[WsClient] = []
    threads: list[threading.Thread] = []
    stop = threading.Event()
    callsigns = [e["callsign"] for e in DESK_DOC["schedule"]]

    def station_loop(client: WsClient, command_every: float = 0.0):
        next_heartbeat = 0.0
        next_command = time.monotonic() + command_every + 2.0
        rng = random.Random(client.wire_name)
        while not stop.is_set():
            now = time.monotonic()
            if now >= next_heartbeat:
                client.send(proto.Heartbeat())
                next_heartbeat = now + 0.4
            if command_every and now >= next_command:
                client.send(
                    proto.PilotCmd(
                        text=f"{rng.choice(callsigns)} FH {rng.randrange(0, 360)}"
                    )
                )
                next_command = now + command_every
            try:
                client.recv(timeout=0.05)
            except TimeoutError:
                pass

    try:
        sup = WsClient(srv.port, "sup")
        clients.append(sup)
        sup.join(proto.Role.SUPERVISOR, scenario_name="desk")
        for i in range(1, 11):
            ctl = WsClient(srv.port, f"ctl{i}")
            clients.append(ctl)
            ctl.join(proto.Role.CONTROLLER, station_index=i)
        pilots = []
        for i in range(1, 11):
            plt = WsClient(srv.port, f"plt{i}")
            clients.append(plt)
            pilots.append(plt)
            plt.join(proto.Role.PSEUDO_PILOT, station_index=i)
        for i in range(1, 11):
            tut = WsClient(srv.port, f"tut{i}")
            clients.append(tut)
            tut.join(proto.Role.REMOTE_TUTOR, station_index=i)
        assert len(clients) == 31

        sup.send(proto.SupervisorCmd(verb="START"))
        for client in clients:
            every = 3.0 if client in pilots else 0.0
            thread = threading.Thread(target=station_loop, args=(client, every), daemon=True)
            threads.append(thread)
            thread.start()

        deadline = time.monotonic() + 100
        while srv.sessions["B1"].core.tick < 60:
            assert time.monotonic() < deadline, "60 ticks should take about a minute"
            time.sleep(0.2)

        stop.set()
        for thread in threads:
            thread.join(timeout=5)
        time.sleep(1.0)  # let the executor drain messages already in flight

        assert healthz(srv.port)["max_tick_processing_s"] < 1.0
        total_sent = sum(c.sent for c in clients)
        log_path = srv.sessions["B1"].log_path
    finally:
        stop.set()
        for c in clients:
            c.close()
        srv.stop()

    from atcsim.eventlog import read_log

    header, records = read_log(str(log_path))
    message_records = [r for r in records if not r.is_checkpoint]
    assert len(message_records) == total_sent
