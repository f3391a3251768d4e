"""Wire protocol and seat-management rules for distributed exercises.

Everything here is a pure function over immutable values: the message
codec (one UTF-8 JSON document per frame), block occupancy transitions,
tutor attachments and control grants, heartbeat liveness, and the radar
picture mirroring deltas a remote tutor consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

from .sim import WorldState, canon_num, _sha256

PROTOCOL_VERSION = 1

MAX_CONTROLLER_STATIONS = 10
MAX_PILOT_STATIONS = 10
MAX_SUPERVISORS = 1

SNAPSHOT_INTERVAL = 50  # full picture every N delta frames
POINTER_MAX_HZ = 10.0
HEARTBEAT_TIMEOUT_TICKS = 10
RECONNECT_GRACE_TICKS = 120

# REJECT reason codes
R_VERSION = "VERSION"
R_MALFORMED = "MALFORMED"
R_BLOCK_FULL = "BLOCK_FULL"
R_STATION_TAKEN = "STATION_TAKEN"
R_NO_OCCUPANT = "NO_OCCUPANT"
R_NO_SUCH_SESSION = "NO_SUCH_SESSION"
R_BLOCK_BUSY = "BLOCK_BUSY"
R_GRACE_EXPIRED = "GRACE_EXPIRED"
R_STATION_REASSIGNED = "STATION_REASSIGNED"
R_NOT_SUPERVISOR = "NOT_SUPERVISOR"
R_BAD_PHASE = "BAD_PHASE"
R_UNKNOWN_CALLSIGN = "UNKNOWN_CALLSIGN"
R_NOT_ATTACHED = "NOT_ATTACHED"
R_ALREADY_ATTACHED = "ALREADY_ATTACHED"
R_TUTOR_BUSY = "TUTOR_BUSY"
R_GRANT_EXISTS = "GRANT_EXISTS"
R_SYNTAX = "SYNTAX"
R_DOMAIN = "DOMAIN"
R_NOT_ALLOWED = "NOT_ALLOWED"
R_NO_SUCH_BLOCK = "NO_SUCH_BLOCK"
R_NO_SUCH_SCENARIO = "NO_SUCH_SCENARIO"
R_INVALID_SCENARIO = "INVALID_SCENARIO"


class DecodeError(ValueError):
    """Frame is not a well-formed protocol message."""


class VersionError(DecodeError):
    """Frame speaks a different protocol version."""


class ProtocolError(Exception):
    """A rule violation that maps onto a REJECT reason code."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class JoinRejected(ProtocolError):
    pass


class AlreadyAttachedError(ProtocolError):
    def __init__(self, detail: str = ""):
        super().__init__(R_ALREADY_ATTACHED, detail)


class TutorBusyError(ProtocolError):
    def __init__(self, detail: str = ""):
        super().__init__(R_TUTOR_BUSY, detail)


class NotAttachedError(ProtocolError):
    def __init__(self, detail: str = ""):
        super().__init__(R_NOT_ATTACHED, detail)


class GrantExistsError(ProtocolError):
    def __init__(self, detail: str = ""):
        super().__init__(R_GRANT_EXISTS, detail)


class DuplicateBlockIdError(ProtocolError):
    def __init__(self, detail: str = ""):
        super().__init__("DUPLICATE_BLOCK_ID", detail)


class DigestMismatch(Exception):
    """Delta does not apply to this picture; request a full snapshot."""


class Role(Enum):
    CONTROLLER = "CONTROLLER"
    COORDINATOR = "COORDINATOR"
    PSEUDO_PILOT = "PSEUDO_PILOT"
    SUPERVISOR = "SUPERVISOR"
    REMOTE_TUTOR = "REMOTE_TUTOR"


class StationKind(Enum):
    CONTROLLER_STN = "CONTROLLER_STN"
    PILOT_STN = "PILOT_STN"
    SUPERVISOR_STN = "SUPERVISOR_STN"


_KIND_CAPACITY = {
    StationKind.CONTROLLER_STN: MAX_CONTROLLER_STATIONS,
    StationKind.PILOT_STN: MAX_PILOT_STATIONS,
    StationKind.SUPERVISOR_STN: MAX_SUPERVISORS,
}


@dataclass(frozen=True)
class StationId:
    block_id: str
    kind: StationKind
    index: int  # 1-based

    def __post_init__(self):
        cap = _KIND_CAPACITY[self.kind]
        if not 1 <= self.index <= cap:
            raise ValueError(f"{self.kind.value} index {self.index} outside 1..{cap}")

    def label(self) -> str:
        prefix = {"CONTROLLER_STN": "C", "PILOT_STN": "P", "SUPERVISOR_STN": "SUP"}[
            self.kind.value
        ]
        return f"{self.block_id}/{prefix}{self.index}"


@dataclass(frozen=True)
class BlockConfig:
    block_id: str
    max_controller_stations: int = MAX_CONTROLLER_STATIONS
    max_pilot_stations: int = MAX_PILOT_STATIONS
    supervisor_count: int = MAX_SUPERVISORS

    def __post_init__(self):
        if not self.block_id:
            raise ValueError("block_id must be non-empty")
        if (
            self.max_controller_stations != MAX_CONTROLLER_STATIONS
            or self.max_pilot_stations != MAX_PILOT_STATIONS
            or self.supervisor_count != MAX_SUPERVISORS
        ):
            raise ValueError("block capacity limits are fixed at 10/10/1")


def clone_block(template: BlockConfig, new_block_id: str, existing_ids=()) -> BlockConfig:
    """Fresh block with the same fixed limits and no occupants."""
    if new_block_id in set(existing_ids) or new_block_id == template.block_id:
        raise DuplicateBlockIdError(new_block_id)
    return BlockConfig(block_id=new_block_id)


# --- radar picture and mirroring --------------------------------------------


@dataclass(frozen=True)
class PictureAircraft:
    callsign: str
    x_nm: float
    y_nm: float
    alt_ft: float
    heading_deg: float
    ground_speed_kt: float


Picture = tuple[PictureAircraft, ...]


def normalize_picture(aircraft) -> Picture:
    """Canonical picture value: unique callsigns, sorted."""
    by_callsign = {a.callsign: a for a in aircraft}
    return tuple(by_callsign[c] for c in sorted(by_callsign))


def picture_of_world(world: WorldState) -> Picture:
    return normalize_picture(
        PictureAircraft(
            callsign=a.callsign,
            x_nm=a.position.x_nm,
            y_nm=a.position.y_nm,
            alt_ft=a.position.alt_ft,
            heading_deg=a.heading_deg,
            ground_speed_kt=a.ground_speed_kt,
        )
        for a in world.aircraft
    )


def picture_digest(picture: Picture) -> str:
    rows = [
        [
            a.callsign,
            canon_num(a.x_nm),
            canon_num(a.y_nm),
            canon_num(a.alt_ft),
            canon_num(a.heading_deg),
            canon_num(a.ground_speed_kt),
        ]
        for a in normalize_picture(picture)
    ]
    return _sha256(rows)


@dataclass(frozen=True)
class AddOp:
    aircraft: PictureAircraft


@dataclass(frozen=True)
class RemoveOp:
    callsign: str


@dataclass(frozen=True)
class MoveOp:
    callsign: str
    x_nm: float
    y_nm: float
    alt_ft: float
    heading_deg: float
    ground_speed_kt: float


MirrorOp = Union[AddOp, RemoveOp, MoveOp]


def diff_pictures(prev: Picture, curr: Picture) -> tuple[MirrorOp, ...]:
    """Minimal ADD/REMOVE/MOVE set transforming prev into curr."""
    before = {a.callsign: a for a in normalize_picture(prev)}
    after = {a.callsign: a for a in normalize_picture(curr)}
    ops: list[MirrorOp] = []
    for callsign in sorted(before.keys() - after.keys()):
        ops.append(RemoveOp(callsign))
    for callsign in sorted(after.keys() - before.keys()):
        ops.append(AddOp(after[callsign]))
    for callsign in sorted(before.keys() & after.keys()):
        a = after[callsign]
        if a != before[callsign]:
            ops.append(
                MoveOp(callsign, a.x_nm, a.y_nm, a.alt_ft, a.heading_deg, a.ground_speed_kt)
            )
    return tuple(ops)


def apply_ops(picture: Picture, ops) -> Picture:
    state = {a.callsign: a for a in normalize_picture(picture)}
    for op in ops:
        if isinstance(op, RemoveOp):
            state.pop(op.callsign, None)
        elif isinstance(op, AddOp):
            state[op.aircraft.callsign] = op.aircraft
        elif isinstance(op, MoveOp):
            state[op.callsign] = PictureAircraft(
                op.callsign, op.x_nm, op.y_nm, op.alt_ft, op.heading_deg, op.ground_speed_kt
            )
        else:
            raise TypeError(f"unknown mirror op {op!r}")
    return normalize_picture(state.values())


# --- payloads ----------------------------------------------------------------


@dataclass(frozen=True)
class Hello:
    client_name: str
    desired_role: Role
    block_id: str = ""
    station_kind: Optional[StationKind] = None
    station_index: int = 0  # 0 = no preference
    scenario_name: str = ""  # supervisors: scenario to load on join
    token: str = ""
    resume_client_id: str = ""  # non-empty = reconnection attempt


@dataclass(frozen=True)
class Welcome:
    client_id: str
    role: Role
    session_id: str
    block_id: str
    station: Optional[StationId] = None
    tick_index: int = 0


@dataclass(frozen=True)
class Reject:
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class Alert:
    kind: str  # SEPARATION, EMERGENCY, RADIO_FAILURE, GO_AROUND
    callsigns: tuple[str, ...]
    detail: str = ""


@dataclass(frozen=True)
class SeatInfo:
    kind: StationKind
    index: int
    client_id: str
    role: Role


@dataclass(frozen=True)
class StateSnapshot:
    picture: Picture
    picture_digest: str
    phase: str
    alerts: tuple[Alert, ...] = ()
    seats: tuple[SeatInfo, ...] = ()


@dataclass(frozen=True)
class StateDelta:
    base_digest: str
    ops: tuple[MirrorOp, ...]
    result_digest: str
    phase: str
    alerts: tuple[Alert, ...] = ()


@dataclass(frozen=True)
class PilotCmd:
    text: str


@dataclass(frozen=True)
class MirrorFrame:
    target_station: StationId
    base_digest: str
    ops: Optional[tuple[MirrorOp, ...]] = None
    full_snapshot: Optional[Picture] = None
    result_digest: str = ""

    def __post_init__(self):
        if (self.ops is None) == (self.full_snapshot is None):
            raise ValueError("exactly one of ops / full_snapshot must be present")


@dataclass(frozen=True)
class Pointer:
    tutor_id: str
    target_station: StationId
    x_nm: float
    y_nm: float
    visible: bool
    shape: str = "CIRCLE"
    color: str = "RED"

    def __post_init__(self):
        if self.shape != "CIRCLE" or self.color != "RED":
            raise ValueError("pointer overlay shape/color are fixed to RED CIRCLE")


@dataclass(frozen=True)
class ControlGrantMsg:
    tutor_id: str
    target_station: StationId
    granted_at_tick: int
    active: bool


@dataclass(frozen=True)
class ControlRevoke:
    tutor_id: str
    target_station: StationId


@dataclass(frozen=True)
class ControlInput:
    target_station: StationId
    text: str  # pilot-command grammar, executed with tutor attribution


@dataclass(frozen=True)
class Transmission:
    frequency_label: str
    text: str


@dataclass(frozen=True)
class SupervisorCmd:
    verb: str  # LOAD_SCENARIO, START, PAUSE, RESUME, STOP, INJECT_EVENT, REASSIGN_STATION
    args: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        # Canonical arg order, so equal commands encode to equal frames.
        object.__setattr__(self, "args", tuple(sorted(self.args)))

    def arg(self, key: str, default: str = "") -> str:
        for k, v in self.args:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class Heartbeat:
    resync: bool = False  # set to request a full picture snapshot
    picture_digest: str = ""


@dataclass(frozen=True)
class Bye:
    reason: str = ""


Payload = Union[
    Hello,
    Welcome,
    Reject,
    StateSnapshot,
    StateDelta,
    PilotCmd,
    MirrorFrame,
    Pointer,
    ControlGrantMsg,
    ControlRevoke,
    ControlInput,
    Transmission,
    SupervisorCmd,
    Heartbeat,
    Bye,
]

_TAG_OF = {
    Hello: "HELLO",
    Welcome: "WELCOME",
    Reject: "REJECT",
    StateSnapshot: "STATE_SNAPSHOT",
    StateDelta: "STATE_DELTA",
    PilotCmd: "PILOT_CMD",
    MirrorFrame: "MIRROR_FRAME",
    Pointer: "POINTER",
    ControlGrantMsg: "CONTROL_GRANT",
    ControlRevoke: "CONTROL_REVOKE",
    ControlInput: "CONTROL_INPUT",
    Transmission: "TRANSMISSION",
    SupervisorCmd: "SUPERVISOR_CMD",
    Heartbeat: "HEARTBEAT",
    Bye: "BYE",
}


@dataclass(frozen=True)
class Message:
    protocol_version: int
    seq: int  # strictly increasing per sender
    sent_at_tick: int
    session_id: str
    sender: str
    payload: Payload

    @property
    def tag(self) -> str:
        return _TAG_OF[type(self.payload)]


def make_message(sender: str, seq: int, payload: Payload, session_id: str = "", tick: int = 0) -> Message:
    return Message(
        protocol_version=PROTOCOL_VERSION,
        seq=seq,
        sent_at_tick=tick,
        session_id=session_id,
        sender=sender,
        payload=payload,
    )


@dataclass(frozen=True)
class Send:
    """An outbound frame and who it is for.

    `to` is a client id, or "@sender" meaning whichever connection delivered
    the inbound message being answered.
    """

    to: str
    message: Message


# --- codec -------------------------------------------------------------------


def _station_to_json(s: Optional[StationId]):
    if s is None:
        return None
    return {"block_id": s.block_id, "kind": s.kind.value, "index": s.index}


def _station_from_json(v, where: str) -> Optional[StationId]:
    if v is None:
        return None
    d = _as_dict(v, where)
    try:
        kind = StationKind(_as_str(d.get("kind"), f"{where}.kind"))
    except ValueError:
        raise DecodeError(f"{where}.kind: unknown station kind {d.get('kind')!r}") from None
    try:
        return StationId(_as_str(d.get("block_id"), f"{where}.block_id"), kind, _as_int(d.get("index"), f"{where}.index"))
    except ValueError as exc:
        raise DecodeError(f"{where}: {exc}") from None


def _aircraft_to_json(a: PictureAircraft) -> dict:
    return {
        "callsign": a.callsign,
        "x_nm": a.x_nm,
        "y_nm": a.y_nm,
        "alt_ft": a.alt_ft,
        "heading_deg": a.heading_deg,
        "ground_speed_kt": a.ground_speed_kt,
    }


def _aircraft_from_json(v, where: str) -> PictureAircraft:
    d = _as_dict(v, where)
    return PictureAircraft(
        callsign=_as_str(d.get("callsign"), f"{where}.callsign"),
        x_nm=_as_num(d.get("x_nm"), f"{where}.x_nm"),
        y_nm=_as_num(d.get("y_nm"), f"{where}.y_nm"),
        alt_ft=_as_num(d.get("alt_ft"), f"{where}.alt_ft"),
        heading_deg=_as_num(d.get("heading_deg"), f"{where}.heading_deg"),
        ground_speed_kt=_as_num(d.get("ground_speed_kt"), f"{where}.ground_speed_kt"),
    )


def _op_to_json(op: MirrorOp) -> dict:
    if isinstance(op, AddOp):
        return {"op": "ADD", "aircraft": _aircraft_to_json(op.aircraft)}
    if isinstance(op, RemoveOp):
        return {"op": "REMOVE", "callsign": op.callsign}
    if isinstance(op, MoveOp):
        return {
            "op": "MOVE",
            "callsign": op.callsign,
            "x_nm": op.x_nm,
            "y_nm": op.y_nm,
            "alt_ft": op.alt_ft,
            "heading_deg": op.heading_deg,
            "ground_speed_kt": op.ground_speed_kt,
        }
    raise TypeError(f"unknown mirror op {op!r}")


def _op_from_json(v, where: str) -> MirrorOp:
    d = _as_dict(v, where)
    kind = d.get("op")
    if kind == "ADD":
        return AddOp(_aircraft_from_json(d.get("aircraft"), f"{where}.aircraft"))
    if kind == "REMOVE":
        return RemoveOp(_as_str(d.get("callsign"), f"{where}.callsign"))
    if kind == "MOVE":
        return MoveOp(
            callsign=_as_str(d.get("callsign"), f"{where}.callsign"),
            x_nm=_as_num(d.get("x_nm"), f"{where}.x_nm"),
            y_nm=_as_num(d.get("y_nm"), f"{where}.y_nm"),
            alt_ft=_as_num(d.get("alt_ft"), f"{where}.alt_ft"),
            heading_deg=_as_num(d.get("heading_deg"), f"{where}.heading_deg"),
            ground_speed_kt=_as_num(d.get("ground_speed_kt"), f"{where}.ground_speed_kt"),
        )
    raise DecodeError(f"{where}.op: unknown mirror op {kind!r}")


def _alert_to_json(a: Alert) -> dict:
    return {"kind": a.kind, "callsigns": list(a.callsigns), "detail": a.detail}


def _alert_from_json(v, where: str) -> Alert:
    d = _as_dict(v, where)
    return Alert(
        kind=_as_str(d.get("kind"), f"{where}.kind"),
        callsigns=tuple(
            _as_str(c, f"{where}.callsigns[{i}]")
            for i, c in enumerate(_as_list(d.get("callsigns", []), f"{where}.callsigns"))
        ),
        detail=_as_str(d.get("detail", ""), f"{where}.detail"),
    )


def _seat_to_json(s: SeatInfo) -> dict:
    return {"kind": s.kind.value, "index": s.index, "client_id": s.client_id, "role": s.role.value}


def _seat_from_json(v, where: str) -> SeatInfo:
    d = _as_dict(v, where)
    try:
        kind = StationKind(_as_str(d.get("kind"), f"{where}.kind"))
        role = Role(_as_str(d.get("role"), f"{where}.role"))
    except ValueError as exc:
        raise DecodeError(f"{where}: {exc}") from None
    return SeatInfo(kind, _as_int(d.get("index"), f"{where}.index"), _as_str(d.get("client_id"), f"{where}.client_id"), role)


def _as_dict(v, where: str) -> dict:
    if not isinstance(v, dict):
        raise DecodeError(f"{where}: expected object")
    return v


def _as_list(v, where: str) -> list:
    if not isinstance(v, list):
        raise DecodeError(f"{where}: expected array")
    return v


def _as_str(v, where: str) -> str:
    if not isinstance(v, str):
        raise DecodeError(f"{where}: expected string")
    return v


def _as_int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise DecodeError(f"{where}: expected integer")
    return v


def _as_num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DecodeError(f"{where}: expected number")
    return float(v)


def _as_bool(v, where: str) -> bool:
    if not isinstance(v, bool):
        raise DecodeError(f"{where}: expected boolean")
    return v


def _payload_to_json(p: Payload) -> dict:
    tag = _TAG_OF.get(type(p))
    if tag is None:
        raise TypeError(f"not a protocol payload: {p!r}")
    if isinstance(p, Hello):
        body = {
            "client_name": p.client_name,
            "desired_role": p.desired_role.value,
            "block_id": p.block_id,
            "station_kind": p.station_kind.value if p.station_kind else None,
            "station_index": p.station_index,
            "scenario_name": p.scenario_name,
            "token": p.token,
            "resume_client_id": p.resume_client_id,
        }
    elif isinstance(p, Welcome):
        body = {
            "client_id": p.client_id,
            "role": p.role.value,
            "session_id": p.session_id,
            "block_id": p.block_id,
            "station": _station_to_json(p.station),
            "tick_index": p.tick_index,
        }
    elif isinstance(p, Reject):
        body = {"reason": p.reason, "detail": p.detail}
    elif isinstance(p, StateSnapshot):
        body = {
            "picture": [_aircraft_to_json(a) for a in p.picture],
            "picture_digest": p.picture_digest,
            "phase": p.phase,
            "alerts": [_alert_to_json(a) for a in p.alerts],
            "seats": [_seat_to_json(s) for s in p.seats],
        }
    elif isinstance(p, StateDelta):
        body = {
            "base_digest": p.base_digest,
            "ops": [_op_to_json(op) for op in p.ops],
            "result_digest": p.result_digest,
            "phase": p.phase,
            "alerts": [_alert_to_json(a) for a in p.alerts],
        }
    elif isinstance(p, PilotCmd):
        body = {"text": p.text}
    elif isinstance(p, MirrorFrame):
        body = {
            "target_station": _station_to_json(p.target_station),
            "base_digest": p.base_digest,
            "ops": None if p.ops is None else [_op_to_json(op) for op in p.ops],
            "full_snapshot": None
            if p.full_snapshot is None
            else [_aircraft_to_json(a) for a in p.full_snapshot],
            "result_digest": p.result_digest,
        }
    elif isinstance(p, Pointer):
        body = {
            "tutor_id": p.tutor_id,
            "target_station": _station_to_json(p.target_station),
            "x_nm": p.x_nm,
            "y_nm": p.y_nm,
            "visible": p.visible,
            "shape": p.shape,
            "color": p.color,
        }
    elif isinstance(p, ControlGrantMsg):
        body = {
            "tutor_id": p.tutor_id,
            "target_station": _station_to_json(p.target_station),
            "granted_at_tick": p.granted_at_tick,
            "active": p.active,
        }
    elif isinstance(p, ControlRevoke):
        body = {"tutor_id": p.tutor_id, "target_station": _station_to_json(p.target_station)}
    elif isinstance(p, ControlInput):
        body = {"target_station": _station_to_json(p.target_station), "text": p.text}
    elif isinstance(p, Transmission):
        body = {"frequency_label": p.frequency_label, "text": p.text}
    elif isinstance(p, SupervisorCmd):
        body = {"verb": p.verb, "args": {k: v for k, v in p.args}}
    elif isinstance(p, Heartbeat):
        body = {"resync": p.resync, "picture_digest": p.picture_digest}
    elif isinstance(p, Bye):
        body = {"reason": p.reason}
    else:  # pragma: no cover - union is closed above
        raise TypeError(f"unhandled payload {p!r}")
    body["tag"] = tag
    return body


def _payload_from_json(d: dict) -> Payload:
    tag = d.get("tag")
    if not isinstance(tag, str):
        raise DecodeError("payload.tag: missing or not a string")
    w = f"payload({tag})"
    if tag == "HELLO":
        role_txt = _as_str(d.get("desired_role"), f"{w}.desired_role")
        try:
            role = Role(role_txt)
        except ValueError:
            raise DecodeError(f"{w}.desired_role: unknown role {role_txt!r}") from None
        kind_v = d.get("station_kind")
        kind = None
        if kind_v is not None:
            try:
                kind = StationKind(_as_str(kind_v, f"{w}.station_kind"))
            except ValueError:
                raise DecodeError(f"{w}.station_kind: unknown kind {kind_v!r}") from None
        return Hello(
            client_name=_as_str(d.get("client_name", ""), f"{w}.client_name"),
            desired_role=role,
            block_id=_as_str(d.get("block_id", ""), f"{w}.block_id"),
            station_kind=kind,
            station_index=_as_int(d.get("station_index", 0), f"{w}.station_index"),
            scenario_name=_as_str(d.get("scenario_name", ""), f"{w}.scenario_name"),
            token=_as_str(d.get("token", ""), f"{w}.token"),
            resume_client_id=_as_str(d.get("resume_client_id", ""), f"{w}.resume_client_id"),
        )
    if tag == "WELCOME":
        role_txt = _as_str(d.get("role"), f"{w}.role")
        try:
            role = Role(role_txt)
        except ValueError:
            raise DecodeError(f"{w}.role: unknown role {role_txt!r}") from None
        return Welcome(
            client_id=_as_str(d.get("client_id"), f"{w}.client_id"),
            role=role,
            session_id=_as_str(d.get("session_id", ""), f"{w}.session_id"),
            block_id=_as_str(d.get("block_id", ""), f"{w}.block_id"),
            station=_station_from_json(d.get("station"), f"{w}.station"),
            tick_index=_as_int(d.get("tick_index", 0), f"{w}.tick_index"),
        )
    if tag == "REJECT":
        return Reject(
            reason=_as_str(d.get("reason"), f"{w}.reason"),
            detail=_as_str(d.get("detail", ""), f"{w}.detail"),
        )
    if tag == "STATE_SNAPSHOT":
        return StateSnapshot(
            picture=tuple(
                _aircraft_from_json(a, f"{w}.picture[{i}]")
                for i, a in enumerate(_as_list(d.get("picture", []), f"{w}.picture"))
            ),
            picture_digest=_as_str(d.get("picture_digest"), f"{w}.picture_digest"),
            phase=_as_str(d.get("phase", ""), f"{w}.phase"),
            alerts=tuple(
                _alert_from_json(a, f"{w}.alerts[{i}]")
                for i, a in enumerate(_as_list(d.get("alerts", []), f"{w}.alerts"))
            ),
            seats=tuple(
                _seat_from_json(s, f"{w}.seats[{i}]")
                for i, s in enumerate(_as_list(d.get("seats", []), f"{w}.seats"))
            ),
        )
    if tag == "STATE_DELTA":
        return StateDelta(
            base_digest=_as_str(d.get("base_digest"), f"{w}.base_digest"),
            ops=tuple(
                _op_from_json(op, f"{w}.ops[{i}]")
                for i, op in enumerate(_as_list(d.get("ops", []), f"{w}.ops"))
            ),
            result_digest=_as_str(d.get("result_digest"), f"{w}.result_digest"),
            phase=_as_str(d.get("phase", ""), f"{w}.phase"),
            alerts=tuple(
                _alert_from_json(a, f"{w}.alerts[{i}]")
                for i, a in enumerate(_as_list(d.get("alerts", []), f"{w}.alerts"))
            ),
        )
    if tag == "PILOT_CMD":
        return PilotCmd(text=_as_str(d.get("text"), f"{w}.text"))
    if tag == "MIRROR_FRAME":
        station = _station_from_json(d.get("target_station"), f"{w}.target_station")
        if station is None:
            raise DecodeError(f"{w}.target_station: required")
        ops_v = d.get("ops")
        snap_v = d.get("full_snapshot")
        ops = None
        snapshot = None
        if ops_v is not None:
            ops = tuple(
                _op_from_json(op, f"{w}.ops[{i}]")
                for i, op in enumerate(_as_list(ops_v, f"{w}.ops"))
            )
        if snap_v is not None:
            snapshot = tuple(
                _aircraft_from_json(a, f"{w}.full_snapshot[{i}]")
                for i, a in enumerate(_as_list(snap_v, f"{w}.full_snapshot"))
            )
        try:
            return MirrorFrame(
                target_station=station,
                base_digest=_as_str(d.get("base_digest", ""), f"{w}.base_digest"),
                ops=ops,
                full_snapshot=snapshot,
                result_digest=_as_str(d.get("result_digest", ""), f"{w}.result_digest"),
            )
        except ValueError as exc:
            raise DecodeError(f"{w}: {exc}") from None
    if tag == "POINTER":
        station = _station_from_json(d.get("target_station"), f"{w}.target_station")
        if station is None:
            raise DecodeError(f"{w}.target_station: required")
        try:
            return Pointer(
                tutor_id=_as_str(d.get("tutor_id"), f"{w}.tutor_id"),
                target_station=station,
                x_nm=_as_num(d.get("x_nm"), f"{w}.x_nm"),
                y_nm=_as_num(d.get("y_nm"), f"{w}.y_nm"),
                visible=_as_bool(d.get("visible"), f"{w}.visible"),
                shape=_as_str(d.get("shape", "CIRCLE"), f"{w}.shape"),
                color=_as_str(d.get("color", "RED"), f"{w}.color"),
            )
        except ValueError as exc:
            raise DecodeError(f"{w}: {exc}") from None
    if tag == "CONTROL_GRANT":
        station = _station_from_json(d.get("target_station"), f"{w}.target_station")
        if station is None:
            raise DecodeError(f"{w}.target_station: required")
        return ControlGrantMsg(
            tutor_id=_as_str(d.get("tutor_id"), f"{w}.tutor_id"),
            target_station=station,
            granted_at_tick=_as_int(d.get("granted_at_tick", 0), f"{w}.granted_at_tick"),
            active=_as_bool(d.get("active"), f"{w}.active"),
        )
    if tag == "CONTROL_REVOKE":
        station = _station_from_json(d.get("target_station"), f"{w}.target_station")
        if station is None:
            raise DecodeError(f"{w}.target_station: required")
        return ControlRevoke(
            tutor_id=_as_str(d.get("tutor_id"), f"{w}.tutor_id"), target_station=station
        )
    if tag == "CONTROL_INPUT":
        station = _station_from_json(d.get("target_station"), f"{w}.target_station")
        if station is None:
            raise DecodeError(f"{w}.target_station: required")
        return ControlInput(target_station=station, text=_as_str(d.get("text"), f"{w}.text"))
    if tag == "TRANSMISSION":
        return Transmission(
            frequency_label=_as_str(d.get("frequency_label", ""), f"{w}.frequency_label"),
            text=_as_str(d.get("text"), f"{w}.text"),
        )
    if tag == "SUPERVISOR_CMD":
        args = _as_dict(d.get("args", {}), f"{w}.args")
        return SupervisorCmd(
            verb=_as_str(d.get("verb"), f"{w}.verb"),
            args=tuple(sorted((k, _as_str(v, f"{w}.args.{k}")) for k, v in args.items())),
        )
    if tag == "HEARTBEAT":
        return Heartbeat(
            resync=_as_bool(d.get("resync", False), f"{w}.resync"),
            picture_digest=_as_str(d.get("picture_digest", ""), f"{w}.picture_digest"),
        )
    if tag == "BYE":
        return Bye(reason=_as_str(d.get("reason", ""), f"{w}.reason"))
    raise DecodeError(f"unknown payload tag {tag!r}")


def message_to_doc(m: Message) -> dict:
    return {
        "protocol_version": m.protocol_version,
        "seq": m.seq,
        "sent_at_tick": m.sent_at_tick,
        "session_id": m.session_id,
        "sender": m.sender,
        "payload": _payload_to_json(m.payload),
    }


def message_from_doc(doc) -> Message:
    if not isinstance(doc, dict):
        raise DecodeError("frame must be a JSON object")
    version = _as_int(doc.get("protocol_version"), "protocol_version")
    if version != PROTOCOL_VERSION:
        raise VersionError(f"protocol version {version}, expected {PROTOCOL_VERSION}")
    return Message(
        protocol_version=version,
        seq=_as_int(doc.get("seq"), "seq"),
        sent_at_tick=_as_int(doc.get("sent_at_tick", 0), "sent_at_tick"),
        session_id=_as_str(doc.get("session_id", ""), "session_id"),
        sender=_as_str(doc.get("sender"), "sender"),
        payload=_payload_from_json(_as_dict(doc.get("payload"), "payload")),
    )


def encode_message(m: Message) -> bytes:
    return json.dumps(message_to_doc(m), sort_keys=True, separators=(",", ":")).encode("utf-8")


def decode_message(frame: bytes | str) -> Message:
    if isinstance(frame, bytes):
        try:
            frame = frame.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"frame is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(frame)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"frame is not JSON: {exc}") from exc
    return message_from_doc(doc)


# --- block occupancy ----------------------------------------------------------


@dataclass(frozen=True)
class BlockOccupancy:
    """Who sits where in one block; transitions are pure."""

    config: BlockConfig
    controllers: tuple[tuple[int, str], ...] = ()  # (station index, client id)
    coordinators: tuple[tuple[int, str], ...] = ()  # keyed by controller station
    pilots: tuple[tuple[int, str], ...] = ()
    supervisor: str = ""

    def controller_at(self, index: int) -> str:
        return dict(self.controllers).get(index, "")

    def seats(self) -> tuple[SeatInfo, ...]:
        rows = []
        for idx, cid in sorted(self.controllers):
            rows.append(SeatInfo(StationKind.CONTROLLER_STN, idx, cid, Role.CONTROLLER))
        for idx, cid in sorted(self.coordinators):
            rows.append(SeatInfo(StationKind.CONTROLLER_STN, idx, cid, Role.COORDINATOR))
        for idx, cid in sorted(self.pilots):
            rows.append(SeatInfo(StationKind.PILOT_STN, idx, cid, Role.PSEUDO_PILOT))
        if self.supervisor:
            rows.append(SeatInfo(StationKind.SUPERVISOR_STN, 1, self.supervisor, Role.SUPERVISOR))
        return tuple(rows)


def _claim(seats: tuple[tuple[int, str], ...], capacity: int, desired: int, client_id: str):
    taken = dict(seats)
    if desired:
        if not 1 <= desired <= capacity:
            raise JoinRejected(R_STATION_TAKEN, f"station index {desired} outside 1..{capacity}")
        if desired in taken:
            raise JoinRejected(R_STATION_TAKEN, f"station {desired} is occupied")
        index = desired
    else:
        index = next((i for i in range(1, capacity + 1) if i not in taken), 0)
        if not index:
            raise JoinRejected(R_BLOCK_FULL, "no free station")
    return tuple(sorted(taken.items() | {(index, client_id)})), index


def join_block(
    occ: BlockOccupancy, role: Role, client_id: str, desired_index: int = 0
) -> tuple[BlockOccupancy, Optional[StationId]]:
    """Seat a client; raises JoinRejected with the protocol reason code."""
    block_id = occ.config.block_id
    if role is Role.CONTROLLER:
        seats, index = _claim(
            occ.controllers, occ.config.max_controller_stations, desired_index, client_id
        )
        return (
            replace(occ, controllers=seats),
            StationId(block_id, StationKind.CONTROLLER_STN, index),
        )
    if role is Role.PSEUDO_PILOT:
        seats, index = _claim(occ.pilots, occ.config.max_pilot_stations, desired_index, client_id)
        return replace(occ, pilots=seats), StationId(block_id, StationKind.PILOT_STN, index)
    if role is Role.SUPERVISOR:
        if occ.supervisor:
            raise JoinRejected(R_BLOCK_FULL, "block already has a supervisor")
        return (
            replace(occ, supervisor=client_id),
            StationId(block_id, StationKind.SUPERVISOR_STN, 1),
        )
    if role is Role.COORDINATOR:
        occupied = dict(occ.controllers)
        with_coord = dict(occ.coordinators)
        if desired_index:
            if desired_index not in occupied:
                raise JoinRejected(
                    R_NO_OCCUPANT, f"controller station {desired_index} has no seated controller"
                )
            index = desired_index
        else:
            index = next((i for i in sorted(occupied) if i not in with_coord), 0)
            if not index:
                raise JoinRejected(R_NO_OCCUPANT, "no controller station available to assist")
        if index in with_coord:
            raise JoinRejected(R_STATION_TAKEN, f"station {index} already has a coordinator")
        coords = tuple(sorted(with_coord.items() | {(index, client_id)}))
        return (
            replace(occ, coordinators=coords),
            StationId(block_id, StationKind.CONTROLLER_STN, index),
        )
    if role is Role.REMOTE_TUTOR:
        return occ, None  # tutors take no seat; they attach to a station
    raise JoinRejected(R_MALFORMED, f"role {role} cannot join")


def leave_block(occ: BlockOccupancy, client_id: str) -> BlockOccupancy:
    """Free every seat held by client_id; unknown clients are a no-op."""
    return replace(
        occ,
        controllers=tuple((i, c) for i, c in occ.controllers if c != client_id),
        coordinators=tuple((i, c) for i, c in occ.coordinators if c != client_id),
        pilots=tuple((i, c) for i, c in occ.pilots if c != client_id),
        supervisor="" if occ.supervisor == client_id else occ.supervisor,
    )


# --- tutor attachments and control grants -------------------------------------


@dataclass(frozen=True)
class TutorAttachment:
    tutor_id: str
    controller_station: StationId


def attach_tutor(
    attachments: tuple[TutorAttachment, ...],
    tutor_id: str,
    station: StationId,
    station_occupied: bool,
) -> tuple[TutorAttachment, ...]:
    if station.kind is not StationKind.CONTROLLER_STN:
        raise NotAttachedError("tutors attach to controller stations only")
    if not station_occupied:
        raise NotAttachedError(f"{station.label()} has no seated controller")
    for a in attachments:
        if a.controller_station == station:
            raise AlreadyAttachedError(f"{station.label()} already has tutor {a.tutor_id}")
        if a.tutor_id == tutor_id:
            raise TutorBusyError(f"{tutor_id} already attached to {a.controller_station.label()}")
    return attachments + (TutorAttachment(tutor_id, station),)


def detach_tutor(attachments: tuple[TutorAttachment, ...], tutor_id: str):
    return tuple(a for a in attachments if a.tutor_id != tutor_id)


def attachment_of(attachments: tuple[TutorAttachment, ...], tutor_id: str):
    for a in attachments:
        if a.tutor_id == tutor_id:
            return a
    return None


@dataclass(frozen=True)
class ControlGrantState:
    tutor_id: str
    target_station: StationId
    granted_at_tick: int
    active: bool = True


def grant_control(
    grants: tuple[ControlGrantState, ...],
    attachments: tuple[TutorAttachment, ...],
    tutor_id: str,
    station: StationId,
    tick: int,
) -> tuple[tuple[ControlGrantState, ...], ControlGrantState]:
    attachment = attachment_of(attachments, tutor_id)
    if attachment is None or attachment.controller_station != station:
        raise NotAttachedError(f"{tutor_id} is not attached to {station.label()}")
    for g in grants:
        if g.active and g.target_station == station:
            raise GrantExistsError(f"{station.label()} already controlled by {g.tutor_id}")
    grant = ControlGrantState(tutor_id, station, tick)
    return grants + (grant,), grant


def revoke_control(
    grants: tuple[ControlGrantState, ...], tutor_id: str, station: StationId
) -> tuple[ControlGrantState, ...]:
    """Idempotent: revoking an absent grant is a no-op."""
    return tuple(
        replace(g, active=False)
        if g.active and g.tutor_id == tutor_id and g.target_station == station
        else g
        for g in grants
    )


def active_grant_on(grants: tuple[ControlGrantState, ...], station: StationId):
    for g in grants:
        if g.active and g.target_station == station:
            return g
    return None


def revoke_all_for(grants: tuple[ControlGrantState, ...], tutor_id: str):
    return tuple(
        replace(g, active=False) if g.active and g.tutor_id == tutor_id else g for g in grants
    )


# --- liveness ------------------------------------------------------------------


class Liveness(Enum):
    ALIVE = "ALIVE"
    SUSPECT = "SUSPECT"
    DEAD = "DEAD"


def check_heartbeat(last_seen_tick: int, now_tick: int, timeout_ticks: int) -> Liveness:
    gap = now_tick - last_seen_tick
    if gap * 2 <= timeout_ticks:
        return Liveness.ALIVE
    if gap <= timeout_ticks:
        return Liveness.SUSPECT
    return Liveness.DEAD


# --- mirror frames ---------------------------------------------------------------


def make_mirror_frame(
    prev_picture: Optional[Picture],
    curr_picture: Picture,
    frames_since_snapshot: int,
    target_station: StationId,
    snapshot_interval: int = SNAPSHOT_INTERVAL,
) -> MirrorFrame:
    """Delta frame against prev_picture, or a full snapshot when prev is
    unknown or the snapshot interval has elapsed."""
    curr = normalize_picture(curr_picture)
    if prev_picture is None or frames_since_snapshot >= snapshot_interval:
        return MirrorFrame(
            target_station=target_station,
            base_digest="",
            full_snapshot=curr,
            result_digest=picture_digest(curr),
        )
    prev = normalize_picture(prev_picture)
    return MirrorFrame(
        target_station=target_station,
        base_digest=picture_digest(prev),
        ops=diff_pictures(prev, curr),
        result_digest=picture_digest(curr),
    )


def apply_mirror_frame(picture: Picture, frame: MirrorFrame) -> Picture:
    """Receiver-side reconstruction; raises DigestMismatch when the delta
    does not apply, which obliges the receiver to request a snapshot."""
    if frame.full_snapshot is not None:
        result = normalize_picture(frame.full_snapshot)
    else:
        base = normalize_picture(picture)
        if picture_digest(base) != frame.base_digest:
            raise DigestMismatch(
                f"delta base {frame.base_digest[:12]} does not match picture"
            )
        result = apply_ops(base, frame.ops)
    if frame.result_digest and picture_digest(result) != frame.result_digest:
        raise DigestMismatch("reconstruction does not match sender digest")
    return result


def should_accept_seq(last_seq: Optional[int], seq: int) -> bool:
    """Duplicate suppression: only strictly increasing sequence numbers."""
    return last_seq is None or seq > last_seq
