"""Shared test utilities: independent oracles, scenario builders, ws client."""

from __future__ import annotations

import itertools
import json
import math
import threading
import time
from typing import Optional

from atcsim import protocol as proto
from atcsim.sim import AircraftState, Position, SeparationMinima


def brute_force_conflicts(aircraft, minima: SeparationMinima, tick_index: int = 0):
    """O(n^2) oracle, deliberately written with a different formulation
    (hypot on raw deltas, explicit pair loop) than the production grid."""
    pairs = set()
    items = list(aircraft)
    for a, b in itertools.combinations(items, 2):
        lateral = math.hypot(
            a.position.x_nm - b.position.x_nm, a.position.y_nm - b.position.y_nm
        )
        vertical = abs(a.position.alt_ft - b.position.alt_ft)
        if lateral < minima.lateral_nm and vertical < minima.vertical_ft:
            pairs.add(tuple(sorted((a.callsign, b.callsign))))
    return pairs


def make_scenario_doc(
    schedule=None,
    events=None,
    duration_s: float = 60.0,
    tick_seconds: float = 1.0,
    waypoints=None,
    minima=None,
) -> dict:
    doc = {
        "schema_version": 1,
        "title": "test exercise",
        "duration_s": duration_s,
        "tick_seconds": tick_seconds,
        "waypoints": waypoints if waypoints is not None else [],
        "sectors": [
            {
                "id": "WEST",
                "frequency_label": "124.3",
                "boundary": [
                    {"x_nm": -200.0, "y_nm": -200.0},
                    {"x_nm": 200.0, "y_nm": -200.0},
                    {"x_nm": 200.0, "y_nm": 200.0},
                    {"x_nm": -200.0, "y_nm": 200.0},
                ],
            }
        ],
        "schedule": schedule if schedule is not None else [],
        "events": events if events is not None else [],
    }
    if minima is not None:
        doc["minima"] = minima
    return doc


def entry(
    callsign: str,
    x: float = 0.0,
    y: float = 0.0,
    alt: float = 10000.0,
    heading: float = 90.0,
    speed: float = 300.0,
    tick: int = 0,
    route=(),
) -> dict:
    return {
        "callsign": callsign,
        "entry_tick": tick,
        "x_nm": x,
        "y_nm": y,
        "alt_ft": alt,
        "heading_deg": heading,
        "ground_speed_kt": speed,
        "route": list(route),
    }


def aircraft(callsign: str, x=0.0, y=0.0, alt=10000.0, heading=90.0, speed=300.0):
    return AircraftState(
        callsign=callsign,
        position=Position(x, y, alt),
        heading_deg=heading,
        ground_speed_kt=speed,
    )


class WsClient:
    """Minimal scripted station for server tests: tracks seq, decodes frames."""

    def __init__(self, port: int, wire_name: str):
        from websockets.sync.client import connect

        self.conn = connect(f"ws://127.0.0.1:{port}", close_timeout=1)
        self.wire_name = wire_name
        self.seq = 0
        self.client_id: Optional[str] = None
        self.session_id = ""
        self.sent = 0
        self._send_lock = threading.Lock()

    def send(self, payload) -> None:
        with self._send_lock:
            self.seq += 1
            sender = self.client_id or self.wire_name
            msg = proto.make_message(sender, self.seq, payload, session_id=self.session_id)
            frame = proto.encode_message(msg)
            self.sent += 1
        self.conn.send(frame)

    def recv(self, timeout: float = 5.0) -> proto.Message:
        return proto.decode_message(self.conn.recv(timeout=timeout))

    def recv_tag(self, tag: str, timeout: float = 5.0) -> proto.Message:
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError(f"no {tag} within {timeout}s")
            msg = self.recv(timeout=remaining)
            if msg.tag == tag:
                return msg

    def join(self, role, block_id="B1", scenario_name="", station_index=0, resume=""):
        self.send(
            proto.Hello(
                client_name=self.wire_name,
                desired_role=role,
                block_id=block_id,
                scenario_name=scenario_name,
                station_index=station_index,
                resume_client_id=resume,
            )
        )
        msg = self.recv_tag("WELCOME")
        self.client_id = msg.payload.client_id
        self.session_id = msg.payload.session_id
        return msg.payload

    def close(self) -> None:
        try:
            self.conn.close()
        except Exception:
            pass


class Keepalive:
    """Background loop that heartbeats a joined client and drains its inbound
    frames, the way a real station program's network thread does.

    While running it owns all receives on the client; the owning test may
    still send control messages from its own thread, but must not recv.
    """

    def __init__(self, client: WsClient, interval_s: float = 0.1):
        self.client = client
        self.interval_s = interval_s
        self.tags: dict[str, int] = {}
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self) -> None:
        next_beat = time.monotonic()
        while not self._stop.is_set():
            if time.monotonic() >= next_beat:
                try:
                    self.client.send(proto.Heartbeat())
                except Exception:
                    return
                next_beat = time.monotonic() + self.interval_s
            try:
                msg = self.client.recv(timeout=0.05)
            except TimeoutError:
                continue
            except Exception:
                return
            self.tags[msg.tag] = self.tags.get(msg.tag, 0) + 1

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5)


def wait_for(predicate, timeout: float = 5.0, interval: float = 0.01) -> None:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return
        time.sleep(interval)
    raise TimeoutError(f"condition not met within {timeout}s")


def healthz(port: int) -> dict:
    import urllib.request

    with urllib.request.urlopen(f"http://127.0.0.1:{port}/healthz", timeout=5) as r:
        return json.loads(r.read())
