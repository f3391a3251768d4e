#!/usr/bin/env python3
"""Live host demo: spin up the exercise host, drive one block over the wire.

Starts `atcsim serve` as a subprocess, joins a supervisor, a controller, and
a pseudo-pilot station over websockets, runs a short exercise with a couple
of pilot commands, then stops the exercise and replays the recording that
the host wrote.  Every radar line shown is reconstructed from snapshot and
delta frames exactly the way a station UI would do it.
"""

from __future__ import annotations

import json
import signal
import socket
import subprocess
import sys
import tempfile
import time
import urllib.request
from pathlib import Path

from websockets.sync.client import connect

from atcsim import protocol as proto

SCENARIO = {
    "schema_version": 1,
    "title": "two crossing arrivals",
    "duration_s": 300,
    "tick_seconds": 1.0,
    "waypoints": [
        {"name": "ALPHA", "x_nm": 0.0, "y_nm": 0.0},
        {"name": "BRAVO", "x_nm": 25.0, "y_nm": 15.0},
    ],
    "sectors": [
        {
            "id": "WEST",
            "frequency_label": "124.250",
            "boundary": [
                {"x_nm": -80.0, "y_nm": -80.0},
                {"x_nm": 80.0, "y_nm": -80.0},
                {"x_nm": 80.0, "y_nm": 80.0},
                {"x_nm": -80.0, "y_nm": 80.0},
            ],
        }
    ],
    "schedule": [
        {
            "callsign": "BAW123",
            "x_nm": -40.0,
            "y_nm": 5.0,
            "alt_ft": 11000,
            "heading_deg": 90.0,
            "ground_speed_kt": 300,
            "route": ["ALPHA", "BRAVO"],
        },
        {
            "callsign": "DLH456",
            "entry_tick": 2,
            "x_nm": 45.0,
            "y_nm": -10.0,
            "alt_ft": 12000,
            "heading_deg": 270.0,
            "ground_speed_kt": 280,
        },
    ],
    "events": [],
}


class Station:
    """One wire connection: joins, heartbeats, applies picture frames."""

    def __init__(self, port: int, name: str):
        self.conn = connect(f"ws://127.0.0.1:{port}", close_timeout=1)
        self.name = name
        self.seq = 0
        self.client_id = ""
        self.session_id = ""
        self.picture: proto.Picture = ()

    def send(self, payload) -> None:
        self.seq += 1
        msg = proto.make_message(
            self.client_id or self.name, self.seq, payload, session_id=self.session_id
        )
        self.conn.send(proto.encode_message(msg))

    def recv(self, timeout: float = 10.0) -> proto.Message:
        return proto.decode_message(self.conn.recv(timeout=timeout))

    def join(self, role: proto.Role, scenario_name: str = "", station_index: int = 0):
        self.send(
            proto.Hello(
                client_name=self.name,
                desired_role=role,
                block_id="B1",
                scenario_name=scenario_name,
                station_index=station_index,
            )
        )
        msg = self.recv()
        if msg.tag != "WELCOME":
            raise SystemExit(f"{self.name}: join rejected: {msg.payload}")
        self.client_id = msg.payload.client_id
        self.session_id = msg.payload.session_id
        seat = msg.payload.station.label() if msg.payload.station else "(no seat)"
        print(f"{self.name}: joined as {msg.payload.role.value} at {seat}")
        return msg.payload

    def pump_picture(self, seconds: float) -> None:
        """Apply inbound state frames for a while, verifying every digest."""
        deadline = time.monotonic() + seconds
        while time.monotonic() < deadline:
            self.send(proto.Heartbeat())
            try:
                msg = self.recv(timeout=0.5)
            except TimeoutError:
                continue
            p = msg.payload
            if msg.tag == "STATE_SNAPSHOT":
                self.picture = p.picture
                assert proto.picture_digest(self.picture) == p.picture_digest
            elif msg.tag == "STATE_DELTA":
                self.picture = proto.apply_ops(self.picture, p.ops)
                assert proto.picture_digest(self.picture) == p.result_digest

    def close(self) -> None:
        try:
            self.send(proto.Bye())
            self.conn.close()
        except Exception:
            pass


def radar_lines(picture: proto.Picture) -> str:
    if not picture:
        return "  (empty scope)"
    return "\n".join(
        f"  {a.callsign:8s} x={a.x_nm:+7.1f} y={a.y_nm:+6.1f}  "
        f"{a.alt_ft:6.0f} ft  hdg {a.heading_deg:5.1f}  {a.ground_speed_kt:3.0f} kt"
        for a in picture
    )


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def main() -> int:
    workdir = Path(tempfile.mkdtemp(prefix="atcsim-demo-"))
    scen_dir = workdir / "scenarios"
    log_dir = workdir / "logs"
    scen_dir.mkdir()
    (scen_dir / "crossing.json").write_text(json.dumps(SCENARIO))

    port = free_port()
    host = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "atcsim.cli",
            "serve",
            "--port",
            str(port),
            "--scenario-dir",
            str(scen_dir),
            "--log-dir",
            str(log_dir),
        ]
    )
    try:
        for _ in range(100):
            try:
                with urllib.request.urlopen(
                    f"http://127.0.0.1:{port}/healthz", timeout=1
                ) as r:
                    json.loads(r.read())
                break
            except OSError:
                time.sleep(0.1)
        else:
            raise SystemExit("host never became healthy")
        print(f"host: listening on port {port}")

        sup = Station(port, "instructor")
        ctl = Station(port, "student-1")
        plt = Station(port, "pilot-desk-1")
        sup.join(proto.Role.SUPERVISOR, scenario_name="crossing")
        ctl.join(proto.Role.CONTROLLER, station_index=1)
        plt.join(proto.Role.PSEUDO_PILOT, station_index=1)

        print("\nsupervisor: START")
        sup.send(proto.SupervisorCmd(verb="START"))
        ctl.pump_picture(3.5)
        print("controller scope after 3 s:")
        print(radar_lines(ctl.picture))

        print("\npilot: BAW123 FH 180, DLH456 C 14000")
        plt.send(proto.PilotCmd(text="BAW123 FH 180"))
        plt.send(proto.PilotCmd(text="DLH456 C 14000"))
        ctl.pump_picture(4.0)
        print("controller scope 4 s later (BAW123 turning, DLH456 climbing):")
        print(radar_lines(ctl.picture))

        print("\nsupervisor: STOP")
        sup.send(proto.SupervisorCmd(verb="STOP"))
        ctl.pump_picture(1.0)

        for station in (plt, ctl, sup):
            station.close()
    finally:
        host.send_signal(signal.SIGTERM)
        host.wait(timeout=10)

    log = log_dir / "B1-s1.atclog"
    print(f"\nhost recorded {log.name}; replaying with digest verification:")
    return subprocess.call(
        [
            sys.executable,
            "-m",
            "atcsim.cli",
            "replay",
            "--scenario",
            str(scen_dir / "crossing.json"),
            "--verify-digests",
            str(log),
        ]
    )


if __name__ == "__main__":
    raise SystemExit(main())
