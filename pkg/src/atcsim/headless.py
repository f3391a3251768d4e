"""Headless scripted exercises: a CI substitute for human stations.

A pilot script stands in for pseudo-pilot keyboards: timed command lines
in the normal pilot grammar.  The run drives a real session core and
writes a normal recording, so its output feeds straight into replay.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

from . import protocol as proto
from .eventlog import EventLogWriter, make_header
from .scenario import Scenario
from .session import Phase, SessionConfig, create_session

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScriptEntry:
    at_tick: int
    text: str  # pilot-command grammar, e.g. "QFA12 FH 270"

    @property
    def callsign(self) -> str:
        return self.text.split(" ", 1)[0]


@dataclass(frozen=True)
class PilotScript:
    entries: tuple[ScriptEntry, ...] = ()

    def __post_init__(self):
        ticks = [e.at_tick for e in self.entries]
        if any(b < a for a, b in zip(ticks, ticks[1:])):
            raise ValueError("script ticks must be non-decreasing")
        if any(t < 0 for t in ticks):
            raise ValueError("script ticks must be >= 0")

    def callsigns(self) -> frozenset[str]:
        return frozenset(e.callsign for e in self.entries)


def parse_pilot_script(text: str) -> PilotScript:
    """One command per line: `<tick> <command text>`; # starts a comment."""
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ValueError(f"line {line_no}: expected '<tick> <command>'")
        try:
            tick = int(parts[0])
        except ValueError:
            raise ValueError(f"line {line_no}: bad tick {parts[0]!r}") from None
        entries.append(ScriptEntry(at_tick=tick, text=parts[1]))
    try:
        return PilotScript(entries=tuple(entries))
    except ValueError as exc:
        raise ValueError(str(exc)) from None


class UnknownScriptCallsign(ValueError):
    def __init__(self, callsigns):
        names = ", ".join(sorted(callsigns))
        super().__init__(f"script commands aircraft not in the scenario: {names}")
        self.callsigns = frozenset(callsigns)


@dataclass(frozen=True)
class HeadlessResult:
    log_path: str
    ticks: int
    final_digest: str
    separation_count: int
    rejected_commands: int


def run_headless(
    scenario: Scenario,
    script: PilotScript,
    log_path: str,
    duration_ticks: Optional[int] = None,
    config: SessionConfig = SessionConfig(),
    session_id: str = "headless-s1",
) -> HeadlessResult:
    """Run an exercise with one scripted pilot; deterministic end to end."""
    known = {e.callsign for e in scenario.schedule}
    unknown = script.callsigns() - known
    if unknown:
        raise UnknownScriptCallsign(unknown)

    core = create_session(session_id, proto.BlockConfig("B1"), scenario, config)
    writer = EventLogWriter(
        log_path,
        make_header(
            session_id, "B1", scenario, config, datetime.now(timezone.utc).isoformat()
        ),
    )
    rejected = 0

    def drive(sender: str, seq: int, payload) -> list[proto.Send]:
        nonlocal rejected
        msg = proto.make_message(
            sender, seq, payload, session_id=core.session_id, tick=core.tick
        )
        writer.append_entry(core.tick, msg)
        sends = core.handle_message(msg)
        for send in sends:
            if isinstance(send.message.payload, proto.Reject):
                rejected += 1
                logger.warning(
                    "command rejected: %s %s",
                    send.message.payload.reason,
                    send.message.payload.detail,
                )
        return sends

    try:
        writer.append_checkpoint(0, core.digest())
        sup_seq = pilot_seq = 0

        sup_seq += 1
        sends = drive(
            "sup", sup_seq, proto.Hello(client_name="supervisor", desired_role=proto.Role.SUPERVISOR)
        )
        sup_id = _welcomed_id(sends)
        pilot_seq += 1
        sends = drive(
            "scripted-pilot",
            pilot_seq,
            proto.Hello(client_name="scripted pilot", desired_role=proto.Role.PSEUDO_PILOT),
        )
        pilot_id = _welcomed_id(sends)

        sup_seq += 1
        drive(sup_id, sup_seq, proto.SupervisorCmd(verb="START"))

        limit = scenario.duration_ticks if duration_ticks is None else duration_ticks
        pending = list(script.entries)
        while core.tick < limit and core.phase is Phase.RUNNING:
            # Stations heartbeat once per tick, like live clients at 1 Hz.
            sup_seq += 1
            drive(sup_id, sup_seq, proto.Heartbeat())
            pilot_seq += 1
            drive(pilot_id, pilot_seq, proto.Heartbeat())
            while pending and pending[0].at_tick == core.tick:
                entry = pending.pop(0)
                pilot_seq += 1
                drive(pilot_id, pilot_seq, proto.PilotCmd(text=entry.text))
            core.run_tick()
            writer.append_checkpoint(core.tick, core.digest())

        if pending:
            logger.warning("%d script command(s) fell past the end of the run", len(pending))
        if core.phase in (Phase.RUNNING, Phase.PAUSED):
            sup_seq += 1
            drive(sup_id, sup_seq, proto.SupervisorCmd(verb="STOP"))
    finally:
        writer.close()

    return HeadlessResult(
        log_path=log_path,
        ticks=core.tick,
        final_digest=core.digest(),
        separation_count=core.separation_count,
        rejected_commands=rejected,
    )


def _welcomed_id(sends: list[proto.Send]) -> str:
    for send in sends:
        if isinstance(send.message.payload, proto.Welcome):
            return send.message.payload.client_id
    raise RuntimeError("join was rejected during a headless run")


def duration_to_ticks(duration_s: float, tick_seconds: float) -> int:
    return int(math.ceil(duration_s / tick_seconds))
