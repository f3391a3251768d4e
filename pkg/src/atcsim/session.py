"""Deterministic session state machine for the exercise host.

SessionCore is transport-free: the host feeds it decoded inbound messages
in arrival order and calls run_tick at the simulation rate.  Given the
same scenario and the same message sequence, every piece of derived state
(world digests, seats, attachments, grants, phase) is identical, so
recording the inputs is sufficient to replay a complete exercise.

Liveness is measured in ticks of the session clock, never wall time, for
the same reason.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from . import protocol as proto
from .protocol import (
    Alert,
    Bye,
    ControlGrantMsg,
    ControlInput,
    ControlRevoke,
    Heartbeat,
    Hello,
    Liveness,
    Message,
    Pointer,
    PilotCmd,
    Reject,
    Role,
    Send,
    StateDelta,
    StateSnapshot,
    StationId,
    StationKind,
    SupervisorCmd,
    Transmission,
    Welcome,
)
from .scenario import EventKind, Scenario, ValidationIssue, build_world, validate_scenario
from .sim import (
    CommandDomainError,
    CommandSyntaxError,
    UnknownCallsignError,
    UnknownWaypointError,
    apply_pilot_command,
    declare_emergency,
    fail_radio,
    go_around,
    parse_pilot_command,
    step_world,
    world_digest,
)

logger = logging.getLogger(__name__)

HOST_SENDER = "host"
TO_SENDER = "@sender"  # resolved by the transport to the inbound connection


class Phase(Enum):
    LOBBY = "LOBBY"
    RUNNING = "RUNNING"
    PAUSED = "PAUSED"
    ENDED = "ENDED"


class InvalidScenarioError(ValueError):
    def __init__(self, issues: list[ValidationIssue]):
        super().__init__("; ".join(str(i) for i in issues) or "invalid scenario")
        self.issues = issues


@dataclass(frozen=True)
class SessionConfig:
    heartbeat_timeout_ticks: int = proto.HEARTBEAT_TIMEOUT_TICKS
    grace_ticks: int = proto.RECONNECT_GRACE_TICKS
    snapshot_interval: int = proto.SNAPSHOT_INTERVAL


@dataclass
class ClientInfo:
    client_id: str
    name: str
    role: Role
    station: Optional[StationId]
    last_seen_tick: int
    liveness: Liveness = Liveness.ALIVE


@dataclass
class DepartedInfo:
    client_id: str
    name: str
    role: Role
    station_kind: Optional[StationKind]
    station_index: int
    last_seen_tick: int


@dataclass
class _MirrorState:
    last_picture: Optional[proto.Picture] = None
    frames_since_snapshot: int = 0


class SessionCore:
    """One exercise: world, seats, attachments, grants, phase."""

    def __init__(
        self,
        session_id: str,
        block: proto.BlockConfig,
        scenario: Scenario,
        config: SessionConfig = SessionConfig(),
    ):
        self.session_id = session_id
        self.block = block
        self.scenario = scenario
        self.config = config
        self.phase = Phase.LOBBY
        self.world = build_world(scenario)
        self.occupancy = proto.BlockOccupancy(config=block)
        self.attachments: tuple[proto.TutorAttachment, ...] = ()
        self.grants: tuple[proto.ControlGrantState, ...] = ()
        self.clients: dict[str, ClientInfo] = {}
        self.departed: dict[str, DepartedInfo] = {}
        self._mirrors: dict[str, _MirrorState] = {}
        self._last_seq: dict[str, int] = {}
        self._fired_events: set[int] = set()
        self._pending_alerts: list[Alert] = []
        self._frames_since_station_snapshot = 0
        self._join_counter = 0
        self._out_seq = 0
        self.separation_count = 0

    # -- helpers ---------------------------------------------------------

    @property
    def tick(self) -> int:
        return self.world.clock.tick_index

    def picture(self) -> proto.Picture:
        return proto.picture_of_world(self.world)

    def digest(self) -> str:
        return world_digest(self.world)

    def _msg(self, payload) -> Message:
        self._out_seq += 1
        return proto.make_message(
            HOST_SENDER, self._out_seq, payload, session_id=self.session_id, tick=self.tick
        )

    def _send(self, to: str, payload) -> Send:
        return Send(to=to, message=self._msg(payload))

    def _reject(self, reason: str, detail: str = "") -> list[Send]:
        return [self._send(TO_SENDER, Reject(reason=reason, detail=detail))]

    def _snapshot_payload(self, alerts: tuple[Alert, ...] = ()) -> StateSnapshot:
        pic = self.picture()
        return StateSnapshot(
            picture=pic,
            picture_digest=proto.picture_digest(pic),
            phase=self.phase.value,
            alerts=alerts,
            seats=self.occupancy.seats(),
        )

    def _station_client_ids(self) -> list[str]:
        """Everyone on the shared radar picture: stations plus supervisor."""
        return sorted(
            c.client_id for c in self.clients.values() if c.role is not Role.REMOTE_TUTOR
        )

    def _station_crew(self, station: StationId) -> list[str]:
        """Controller and coordinator seated at one controller station."""
        crew = []
        for idx, cid in self.occupancy.controllers:
            if idx == station.index:
                crew.append(cid)
        for idx, cid in self.occupancy.coordinators:
            if idx == station.index:
                crew.append(cid)
        return sorted(crew)

    # -- message handling --------------------------------------------------

    def handle_message(self, msg: Message) -> list[Send]:
        """Apply one inbound message; returns the frames to transmit."""
        p = msg.payload
        if isinstance(p, Hello):
            # HELLO (re)starts the sender's sequence tracking: a reconnecting
            # client restarts its counter and must not be suppressed.
            self._last_seq[msg.sender] = msg.seq
            return self._on_hello(msg)
        if not proto.should_accept_seq(self._last_seq.get(msg.sender), msg.seq):
            return []  # duplicate or stale frame, applied at most once
        self._last_seq[msg.sender] = msg.seq

        client = self.clients.get(msg.sender)
        if client is None:
            return self._reject(proto.R_NOT_ALLOWED, "join with HELLO first")
        client.last_seen_tick = self.tick
        client.liveness = Liveness.ALIVE

        if isinstance(p, Bye):
            return self._on_bye(client)
        if self.phase is Phase.ENDED:
            return self._reject(proto.R_BAD_PHASE, "exercise has ended")
        if isinstance(p, Heartbeat):
            return self._on_heartbeat(client, p)
        if isinstance(p, PilotCmd):
            return self._on_pilot_cmd(client, p)
        if isinstance(p, ControlInput):
            return self._on_control_input(client, p)
        if isinstance(p, Pointer):
            return self._on_pointer(client, p)
        if isinstance(p, ControlGrantMsg):
            return self._on_grant_request(client, p)
        if isinstance(p, ControlRevoke):
            return self._on_revoke(client, p)
        if isinstance(p, Transmission):
            return self._on_transmission(client, p, msg)
        if isinstance(p, SupervisorCmd):
            return self._on_supervisor_cmd(client, p)
        return self._reject(proto.R_NOT_ALLOWED, f"{msg.tag} is host-originated")

    # -- joining -----------------------------------------------------------

    def _on_hello(self, msg: Message) -> list[Send]:
        p: Hello = msg.payload
        if p.resume_client_id:
            return self._on_resume(msg)
        if self.phase is Phase.ENDED:
            return self._reject(proto.R_BAD_PHASE, "exercise has ended")

        self._join_counter += 1
        client_id = f"cl{self._join_counter}"
        role = p.desired_role
        try:
            if role is Role.REMOTE_TUTOR:
                station = self._attach_station_for(p.station_index)
                occupied = self.occupancy.controller_at(station.index) != ""
                self.attachments = proto.attach_tutor(
                    self.attachments, client_id, station, occupied
                )
                self._mirrors[client_id] = _MirrorState()
            else:
                self.occupancy, station = proto.join_block(
                    self.occupancy, role, client_id, p.station_index
                )
        except proto.ProtocolError as exc:
            self._join_counter -= 1
            return self._reject(exc.reason, exc.detail)

        self.clients[client_id] = ClientInfo(
            client_id=client_id,
            name=p.client_name or client_id,
            role=role,
            station=station,
            last_seen_tick=self.tick,
        )
        out = [
            self._send(
                TO_SENDER,
                Welcome(
                    client_id=client_id,
                    role=role,
                    session_id=self.session_id,
                    block_id=self.block.block_id,
                    station=station,
                    tick_index=self.tick,
                ),
            )
        ]
        if role is not Role.REMOTE_TUTOR:
            out.append(self._send(client_id, self._snapshot_payload()))
        return out

    def _attach_station_for(self, desired_index: int) -> StationId:
        taken = {a.controller_station.index for a in self.attachments}
        if desired_index:
            index = desired_index
        else:
            occupied = sorted(idx for idx, _ in self.occupancy.controllers)
            index = next((i for i in occupied if i not in taken), 0)
            if not index:
                raise proto.NotAttachedError("no occupied controller station to mirror")
        return StationId(self.block.block_id, StationKind.CONTROLLER_STN, index)

    def _on_resume(self, msg: Message) -> list[Send]:
        p: Hello = msg.payload
        rid = p.resume_client_id
        now = self.tick

        if rid in self.clients:
            # Seat still held (ALIVE or SUSPECT): give it straight back.
            client = self.clients[rid]
            client.last_seen_tick = now
            client.liveness = Liveness.ALIVE
            self._last_seq[rid] = 0  # client restarted its counter
            return self._welcome_back(client)

        d = self.departed.get(rid)
        if d is None or now - d.last_seen_tick > self.config.grace_ticks:
            self.departed.pop(rid, None)
            return self._reject(proto.R_GRACE_EXPIRED, f"no resumable client {rid!r}")

        try:
            if d.role is Role.REMOTE_TUTOR:
                station = StationId(
                    self.block.block_id, StationKind.CONTROLLER_STN, d.station_index
                )
                occupied = self.occupancy.controller_at(d.station_index) != ""
                self.attachments = proto.attach_tutor(self.attachments, rid, station, occupied)
                self._mirrors[rid] = _MirrorState()
            else:
                self.occupancy, station = proto.join_block(
                    self.occupancy, d.role, rid, d.station_index
                )
        except proto.ProtocolError as exc:
            return self._reject(proto.R_STATION_REASSIGNED, exc.detail or exc.reason)

        del self.departed[rid]
        client = ClientInfo(
            client_id=rid, name=d.name, role=d.role, station=station, last_seen_tick=now
        )
        self.clients[rid] = client
        self._last_seq[rid] = 0
        return self._welcome_back(client)

    def _welcome_back(self, client: ClientInfo) -> list[Send]:
        out = [
            self._send(
                TO_SENDER,
                Welcome(
                    client_id=client.client_id,
                    role=client.role,
                    session_id=self.session_id,
                    block_id=self.block.block_id,
                    station=client.station,
                    tick_index=self.tick,
                ),
            )
        ]
        if client.role is Role.REMOTE_TUTOR:
            # Force a full picture on the next mirror frame.
            self._mirrors[client.client_id] = _MirrorState()
        else:
            out.append(self._send(client.client_id, self._snapshot_payload()))
        return out

    def _on_bye(self, client: ClientInfo) -> list[Send]:
        self._drop_client(client.client_id, remember=False)
        return []

    def _drop_client(self, client_id: str, remember: bool) -> None:
        client = self.clients.pop(client_id, None)
        if client is None:
            return
        self.occupancy = proto.leave_block(self.occupancy, client_id)
        self.grants = proto.revoke_all_for(self.grants, client_id)
        attachment = proto.attachment_of(self.attachments, client_id)
        if attachment is not None:
            self.attachments = proto.detach_tutor(self.attachments, client_id)
        self._mirrors.pop(client_id, None)
        if remember:
            self.departed[client_id] = DepartedInfo(
                client_id=client_id,
                name=client.name,
                role=client.role,
                station_kind=client.station.kind if client.station else None,
                station_index=client.station.index if client.station else 0,
                last_seen_tick=client.last_seen_tick,
            )

    # -- station traffic -----------------------------------------------------

    def _on_heartbeat(self, client: ClientInfo, p: Heartbeat) -> list[Send]:
        if not p.resync:
            return []
        if client.role is Role.REMOTE_TUTOR:
            self._mirrors[client.client_id] = _MirrorState()
            return []
        return [self._send(client.client_id, self._snapshot_payload())]

    def _apply_command_text(self, text: str, issued_by: str) -> Optional[tuple[str, str]]:
        """Run one pilot-grammar command; returns (reason, detail) on failure."""
        try:
            cmd = parse_pilot_command(text, self.world.waypoints, issued_by=issued_by)
            self.world = apply_pilot_command(self.world, cmd)
        except CommandSyntaxError as exc:
            return proto.R_SYNTAX, str(exc)
        except CommandDomainError as exc:
            return proto.R_DOMAIN, str(exc)
        except UnknownWaypointError as exc:
            return proto.R_DOMAIN, f"unknown waypoint {exc.args[0]}"
        except UnknownCallsignError as exc:
            return proto.R_UNKNOWN_CALLSIGN, f"unknown callsign {exc.args[0]}"
        return None

    def _on_pilot_cmd(self, client: ClientInfo, p: PilotCmd) -> list[Send]:
        if client.role is not Role.PSEUDO_PILOT:
            return self._reject(proto.R_NOT_ALLOWED, "only pilot stations fly aircraft")
        if self.phase is not Phase.RUNNING:
            return self._reject(proto.R_BAD_PHASE, f"phase is {self.phase.value}")
        failure = self._apply_command_text(p.text, issued_by=client.client_id)
        if failure:
            return self._reject(*failure)
        return []

    def _on_control_input(self, client: ClientInfo, p: ControlInput) -> list[Send]:
        if client.role is not Role.REMOTE_TUTOR:
            return self._reject(proto.R_NOT_ALLOWED, "control input is tutor-only")
        grant = proto.active_grant_on(self.grants, p.target_station)
        if grant is None or grant.tutor_id != client.client_id:
            return self._reject(proto.R_NOT_ALLOWED, "no active control grant")
        if self.phase is not Phase.RUNNING:
            return self._reject(proto.R_BAD_PHASE, f"phase is {self.phase.value}")
        failure = self._apply_command_text(p.text, issued_by=client.client_id)
        if failure:
            return self._reject(*failure)
        # The seated crew sees the tutor acting on their station.
        return [self._send(cid, p) for cid in self._station_crew(p.target_station)]

    def _on_pointer(self, client: ClientInfo, p: Pointer) -> list[Send]:
        attachment = proto.attachment_of(self.attachments, client.client_id)
        if attachment is None or attachment.controller_station != p.target_station:
            return self._reject(proto.R_NOT_ATTACHED, "pointer requires an attachment")
        return [self._send(cid, p) for cid in self._station_crew(p.target_station)]

    def _on_grant_request(self, client: ClientInfo, p: ControlGrantMsg) -> list[Send]:
        if not p.active:
            return self._on_revoke(client, ControlRevoke(p.tutor_id, p.target_station))
        try:
            self.grants, grant = proto.grant_control(
                self.grants, self.attachments, client.client_id, p.target_station, self.tick
            )
        except proto.ProtocolError as exc:
            return self._reject(exc.reason, exc.detail)
        note = ControlGrantMsg(
            tutor_id=grant.tutor_id,
            target_station=grant.target_station,
            granted_at_tick=grant.granted_at_tick,
            active=True,
        )
        targets = self._station_crew(p.target_station) + [client.client_id]
        if self.occupancy.supervisor:
            targets.append(self.occupancy.supervisor)
        return [self._send(cid, note) for cid in sorted(set(targets))]

    def _on_revoke(self, client: ClientInfo, p: ControlRevoke) -> list[Send]:
        self.grants = proto.revoke_control(self.grants, client.client_id, p.target_station)
        note = ControlRevoke(tutor_id=client.client_id, target_station=p.target_station)
        targets = self._station_crew(p.target_station) + [client.client_id]
        if self.occupancy.supervisor:
            targets.append(self.occupancy.supervisor)
        return [self._send(cid, note) for cid in sorted(set(targets))]

    def _on_transmission(self, client: ClientInfo, p: Transmission, msg: Message) -> list[Send]:
        # Party line: everyone in the session hears it; clients filter by label.
        relay = Transmission(frequency_label=p.frequency_label, text=f"{client.name}: {p.text}")
        return [self._send(cid, relay) for cid in sorted(self.clients) if cid != client.client_id]

    # -- supervisor ------------------------------------------------------------

    def _on_supervisor_cmd(self, client: ClientInfo, p: SupervisorCmd) -> list[Send]:
        if client.role is not Role.SUPERVISOR:
            return self._reject(proto.R_NOT_SUPERVISOR, "supervisor role required")
        verb = p.verb
        if verb == "START":
            return self._transition(Phase.LOBBY, Phase.RUNNING)
        if verb == "PAUSE":
            return self._transition(Phase.RUNNING, Phase.PAUSED)
        if verb == "RESUME":
            return self._transition(Phase.PAUSED, Phase.RUNNING)
        if verb == "STOP":
            if self.phase not in (Phase.RUNNING, Phase.PAUSED):
                return self._reject(proto.R_BAD_PHASE, f"cannot STOP from {self.phase.value}")
            self.phase = Phase.ENDED
            return self._broadcast_phase()
        if verb == "INJECT_EVENT":
            return self._inject_event(p.arg("kind"), p.arg("target").upper())
        if verb == "REASSIGN_STATION":
            return self._reassign(p.arg("client_id"), p.arg("station_index"))
        if verb == "LOAD_SCENARIO":
            # Scenario files live with the transport host; it intercepts this
            # verb before the core sees it.
            return self._reject(proto.R_NOT_ALLOWED, "host did not accept LOAD_SCENARIO")
        return self._reject(proto.R_NOT_ALLOWED, f"unknown supervisor verb {verb!r}")

    def _transition(self, expected: Phase, to: Phase) -> list[Send]:
        if self.phase is not expected:
            return self._reject(
                proto.R_BAD_PHASE, f"{to.value} requires {expected.value}, not {self.phase.value}"
            )
        self.phase = to
        return self._broadcast_phase()

    def _broadcast_phase(self) -> list[Send]:
        snapshot = self._snapshot_payload()
        out = [self._send(cid, snapshot) for cid in self._station_client_ids()]
        for tutor_id in sorted(self._mirrors):
            self._mirrors[tutor_id] = _MirrorState()  # next frame is a full picture
        return out

    def _inject_event(self, kind_txt: str, target: str) -> list[Send]:
        if self.phase not in (Phase.RUNNING, Phase.PAUSED):
            return self._reject(proto.R_BAD_PHASE, f"phase is {self.phase.value}")
        try:
            kind = EventKind(kind_txt)
        except ValueError:
            return self._reject(proto.R_NOT_ALLOWED, f"unknown event kind {kind_txt!r}")
        try:
            self.world = _EVENT_EFFECTS[kind](self.world, target)
        except UnknownCallsignError:
            return self._reject(proto.R_UNKNOWN_CALLSIGN, f"unknown callsign {target!r}")
        self._pending_alerts.append(
            Alert(kind=kind.value, callsigns=(target,), detail="supervisor injected")
        )
        return []

    def _reassign(self, client_id: str, index_txt: str) -> list[Send]:
        target = self.clients.get(client_id)
        if target is None:
            return self._reject(proto.R_NOT_ALLOWED, f"no client {client_id!r}")
        if target.role not in (Role.CONTROLLER, Role.PSEUDO_PILOT):
            return self._reject(proto.R_NOT_ALLOWED, "only station roles can be reassigned")
        try:
            index = int(index_txt)
        except ValueError:
            return self._reject(proto.R_NOT_ALLOWED, f"bad station index {index_txt!r}")
        trial = proto.leave_block(self.occupancy, client_id)
        try:
            self.occupancy, station = proto.join_block(trial, target.role, client_id, index)
        except proto.JoinRejected as exc:
            return self._reject(exc.reason, exc.detail)
        target.station = station
        return [
            self._send(
                client_id,
                Welcome(
                    client_id=client_id,
                    role=target.role,
                    session_id=self.session_id,
                    block_id=self.block.block_id,
                    station=station,
                    tick_index=self.tick,
                ),
            ),
            self._send(client_id, self._snapshot_payload()),
        ]

    # -- the tick ---------------------------------------------------------------

    def run_tick(self) -> list[Send]:
        """Advance one tick: liveness, scripted events, integration, fan-out."""
        if self.phase is not Phase.RUNNING:
            return []
        out: list[Send] = []
        now = self.tick

        for client_id in sorted(self.clients):
            client = self.clients[client_id]
            state = proto.check_heartbeat(
                client.last_seen_tick, now, self.config.heartbeat_timeout_ticks
            )
            client.liveness = state
            if state is Liveness.DEAD:
                tutor_grants = [
                    g for g in self.grants if g.active and g.tutor_id == client_id
                ]
                self._drop_client(client_id, remember=True)
                for g in tutor_grants:
                    note = ControlRevoke(tutor_id=client_id, target_station=g.target_station)
                    for cid in self._station_crew(g.target_station):
                        out.append(self._send(cid, note))

        for i, event in enumerate(self.scenario.events):
            if i not in self._fired_events and event.trigger_tick == now:
                self._fired_events.add(i)
                try:
                    self.world = _EVENT_EFFECTS[event.kind](self.world, event.target)
                except UnknownCallsignError:
                    logger.warning(
                        "scripted %s skipped: %s not in the air", event.kind.value, event.target
                    )
                    continue
                self._pending_alerts.append(
                    Alert(
                        kind=event.kind.value,
                        callsigns=(event.target,),
                        detail=event.description,
                    )
                )

        prev_picture = self.picture()
        self.world, separation = step_world(self.world, self.scenario.minima)
        self.separation_count += len(separation)
        alerts = tuple(self._pending_alerts) + tuple(
            Alert(
                kind="SEPARATION",
                callsigns=ev.pair,
                detail=f"{ev.lateral_nm:.1f} NM / {ev.vertical_ft:.0f} ft",
            )
            for ev in separation
        )
        self._pending_alerts.clear()
        curr_picture = self.picture()

        station_ids = self._station_client_ids()
        self._frames_since_station_snapshot += 1
        if self._frames_since_station_snapshot >= self.config.snapshot_interval:
            self._frames_since_station_snapshot = 0
            payload = self._snapshot_payload(alerts)
            out.extend(self._send(cid, payload) for cid in station_ids)
        else:
            delta = StateDelta(
                base_digest=proto.picture_digest(prev_picture),
                ops=proto.diff_pictures(prev_picture, curr_picture),
                result_digest=proto.picture_digest(curr_picture),
                phase=self.phase.value,
                alerts=alerts,
            )
            out.extend(self._send(cid, delta) for cid in station_ids)

        for attachment in sorted(self.attachments, key=lambda a: a.tutor_id):
            state = self._mirrors.setdefault(attachment.tutor_id, _MirrorState())
            frame = proto.make_mirror_frame(
                state.last_picture,
                curr_picture,
                state.frames_since_snapshot,
                attachment.controller_station,
                self.config.snapshot_interval,
            )
            state.last_picture = curr_picture
            state.frames_since_snapshot = (
                0 if frame.full_snapshot is not None else state.frames_since_snapshot + 1
            )
            out.append(self._send(attachment.tutor_id, frame))

        if self.tick >= self.scenario.duration_ticks:
            self.phase = Phase.ENDED
            out.extend(self._broadcast_phase())
        return out


_EVENT_EFFECTS = {
    EventKind.EMERGENCY_DECLARED: declare_emergency,
    EventKind.RADIO_FAILURE: fail_radio,
    EventKind.GO_AROUND: go_around,
}


def create_session(
    session_id: str,
    block: proto.BlockConfig,
    scenario: Scenario,
    config: SessionConfig = SessionConfig(),
) -> SessionCore:
    """Gate session creation on a clean scenario validation."""
    errors = [i for i in validate_scenario(scenario) if i.severity == "ERROR"]
    if errors:
        raise InvalidScenarioError(errors)
    return SessionCore(session_id, block, scenario, config)
