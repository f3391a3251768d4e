#!/usr/bin/env python3
"""Regenerate golden wire fixtures from the host codec.

Run from this directory after any protocol change:

    python3 make_fixtures.py
"""
from __future__ import annotations

import json
import pathlib
import sys

from atcsim import protocol as P
from atcsim.sim import canon_num

HERE = pathlib.Path(__file__).parent


def _aircraft(callsign: str, x: float, y: float, alt: float, hdg: float, spd: float):
    return P.PictureAircraft(callsign, x, y, alt, hdg, spd)


STATION = P.StationId("B1", P.StationKind.CONTROLLER_STN, 4)
PILOT_STN = P.StationId("B1", P.StationKind.PILOT_STN, 2)
SUP_STN = P.StationId("B1", P.StationKind.SUPERVISOR_STN, 1)

PICTURE = (
    _aircraft("BAW123", 12.5, -3.25, 11000.0, 97.3000001, 310.0),
    _aircraft("DLH456", -0.0078125, 0.0078125, 12000.0, 270.0, 250.0),
    _aircraft("AF1", 0.1, 0.2, 5000.5, 359.9999999, 180.25),
)

OPS = (
    P.AddOp(_aircraft("KLM88", 1.0, 2.0, 3000.0, 45.0, 200.0)),
    P.RemoveOp("AF1"),
    P.MoveOp("BAW123", 12.6, -3.3, 11050.0, 98.0, 310.0),
)

ALERT = P.Alert(kind="SEPARATION", callsigns=("BAW123", "DLH456"), detail="4.2 NM / 800 ft")
SEATS = (
    P.SeatInfo(P.StationKind.CONTROLLER_STN, 4, "c-1", P.Role.CONTROLLER),
    P.SeatInfo(P.StationKind.SUPERVISOR_STN, 1, "s-1", P.Role.SUPERVISOR),
)

PAYLOADS = {
    "hello_controller": P.Hello(
        client_name="student-1",
        desired_role=P.Role.CONTROLLER,
        block_id="B1",
        station_kind=P.StationKind.CONTROLLER_STN,
        station_index=4,
        token="tk",
    ),
    "hello_resume": P.Hello(
        client_name="student-1",
        desired_role=P.Role.CONTROLLER,
        block_id="B1",
        resume_client_id="c-1",
    ),
    "welcome": P.Welcome(
        client_id="c-1",
        role=P.Role.CONTROLLER,
        session_id="B1-s1",
        block_id="B1",
        station=STATION,
        tick_index=42,
    ),
    "welcome_no_station": P.Welcome(client_id="t-1", role=P.Role.REMOTE_TUTOR, session_id="B1-s1", block_id="B1"),
    "reject": P.Reject(reason=P.R_STATION_TAKEN, detail="CONTROLLER_STN 4 occupied"),
    "snapshot": P.StateSnapshot(
        picture=PICTURE,
        picture_digest=P.picture_digest(PICTURE),
        phase="RUNNING",
        alerts=(ALERT,),
        seats=SEATS,
    ),
    "delta": P.StateDelta(
        base_digest=P.picture_digest(PICTURE),
        ops=OPS,
        result_digest=P.picture_digest(P.apply_ops(PICTURE, OPS)),
        phase="RUNNING",
        alerts=(),
    ),
    "pilot_cmd": P.PilotCmd(text="BAW123 FH 120"),
    "mirror_ops": P.MirrorFrame(
        target_station=STATION,
        base_digest=P.picture_digest(PICTURE),
        ops=OPS,
        full_snapshot=None,
        result_digest=P.picture_digest(P.apply_ops(PICTURE, OPS)),
    ),
    "mirror_snapshot": P.MirrorFrame(
        target_station=STATION,
        base_digest="",
        ops=None,
        full_snapshot=PICTURE,
        result_digest=P.picture_digest(PICTURE),
    ),
    "pointer": P.Pointer(
        tutor_id="t-1", target_station=STATION, x_nm=5.0, y_nm=-2.5, visible=True
    ),
    "control_grant": P.ControlGrantMsg(
        tutor_id="t-1", target_station=STATION, granted_at_tick=100, active=True
    ),
    "control_revoke": P.ControlRevoke(tutor_id="t-1", target_station=STATION),
    "control_input": P.ControlInput(target_station=STATION, text="BAW123 FH 180"),
    "transmission": P.Transmission(frequency_label="124.250", text="BAW123 turn left"),
    "supervisor_cmd": P.SupervisorCmd(
        verb="INJECT_EVENT", args=(("kind", "GO_AROUND"), ("target", "BAW123"))
    ),
    "heartbeat": P.Heartbeat(resync=False, picture_digest=""),
    "heartbeat_resync": P.Heartbeat(resync=True, picture_digest=P.picture_digest(PICTURE)),
    "bye": P.Bye(reason="console closed"),
}


def frames() -> list[dict]:
    out = []
    for idx, (name, payload) in enumerate(sorted(PAYLOADS.items())):
        msg = P.make_message(
            sender=f"sender-{idx}", seq=idx + 1, payload=payload, session_id="B1-s1", tick=idx
        )
        out.append({"name": name, "frame": P.encode_message(msg).decode("utf-8")})
    return out


CANON_SAMPLES = [
    0.0,
    -0.0,
    1.0,
    -1.0,
    5.0,
    0.1,
    -0.1,
    1 / 3,
    2 / 3,
    0.0078125,          # 1/128: exact 6-decimal tie, rounds half-even
    -0.0078125,
    0.0234375,          # 3/128: tie rounding the other way
    -0.0234375,
    2.5e-7,             # rounds to zero
    -2.5e-7,            # negative zero must collapse
    123456.789,
    -123456.789,
    359.9999999,
    1e-7,
    -1e-7,
    9007199254740992.0,  # 2^53
    1.5e16,
    4.9e-324,            # smallest denormal
    1.7976931348623157e308,
]


def canon_rows() -> list[list]:
    return [[x, canon_num(x)] for x in CANON_SAMPLES]


def digest_rows() -> list[dict]:
    singles = (PICTURE[0],)
    return [
        {"picture": [P._aircraft_to_json(a) for a in PICTURE], "digest": P.picture_digest(PICTURE)},
        {"picture": [P._aircraft_to_json(a) for a in singles], "digest": P.picture_digest(singles)},
        {"picture": [], "digest": P.picture_digest(())},
        {
            "picture": [P._aircraft_to_json(a) for a in P.apply_ops(PICTURE, OPS)],
            "digest": P.picture_digest(P.apply_ops(PICTURE, OPS)),
        },
    ]


def main() -> int:
    (HERE / "frames.json").write_text(json.dumps(frames(), indent=1) + "\n")
    (HERE / "canon_num.json").write_text(json.dumps(canon_rows(), indent=1) + "\n")
    (HERE / "digests.json").write_text(json.dumps(digest_rows(), indent=1) + "\n")
    print("wrote frames.json canon_num.json digests.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
