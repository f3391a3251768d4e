"""Append-only exercise recordings and offline replay.

A recording (`.atclog`) is line-delimited JSON: one header line, then
input records {"tick_index", "message"} interleaved with digest
checkpoints {"tick_index", "digest"}.  Inputs are everything a session
consumed; checkpoints pin the world digest after each integrated tick.
Replaying the inputs through a fresh session must reproduce every
checkpoint exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterator, Optional

from . import protocol as proto
from .scenario import Scenario, scenario_digest
from .session import Phase, SessionConfig, create_session

LOG_KIND = "atclog"
LOG_SCHEMA_VERSION = 1
LOG_SUFFIX = ".atclog"


class CorruptLog(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class ScenarioMismatch(ValueError):
    """The provided scenario is not the one this log was recorded against."""


def make_header(
    session_id: str,
    block_id: str,
    scenario: Scenario,
    config: SessionConfig,
    started_at: str,
) -> dict:
    return {
        "kind": LOG_KIND,
        "schema_version": LOG_SCHEMA_VERSION,
        "session_id": session_id,
        "block_id": block_id,
        "scenario_title": scenario.title,
        "scenario_digest": scenario_digest(scenario),
        "tick_seconds": scenario.tick_seconds,
        "heartbeat_timeout_ticks": config.heartbeat_timeout_ticks,
        "grace_ticks": config.grace_ticks,
        "snapshot_interval": config.snapshot_interval,
        "started_at": started_at,  # wall clock; the only non-reproducible field
    }


class EventLogWriter:
    def __init__(self, path: str, header: dict):
        self.path = path
        self._fh = open(path, "w", encoding="utf-8")
        self._write(header)

    def _write(self, obj: dict) -> None:
        self._fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")
        self._fh.flush()

    def append_entry(self, tick_index: int, message: proto.Message) -> None:
        self._write({"tick_index": tick_index, "message": proto.message_to_doc(message)})

    def append_checkpoint(self, tick_index: int, digest: str) -> None:
        self._write({"tick_index": tick_index, "digest": digest})

    def sync(self) -> None:
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        if not self._fh.closed:
            self.sync()
            self._fh.close()


@dataclass(frozen=True)
class LogRecord:
    line_no: int  # 1-based position in the file
    tick_index: int
    message_doc: Optional[dict] = None
    digest: Optional[str] = None

    @property
    def is_checkpoint(self) -> bool:
        return self.digest is not None


def read_log(path: str) -> tuple[dict, list[LogRecord]]:
    """Parse a recording strictly; raises CorruptLog naming the bad line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptLog(1, "empty file, missing header")

    def parse_line(line_no: int, text: str) -> dict:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptLog(line_no, f"not valid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise CorruptLog(line_no, "record is not a JSON object")
        return obj

    header = parse_line(1, lines[0])
    if header.get("kind") != LOG_KIND:
        raise CorruptLog(1, "missing recording header")
    if header.get("schema_version") != LOG_SCHEMA_VERSION:
        raise CorruptLog(1, f"unsupported log schema {header.get('schema_version')!r}")

    records = []
    last_tick = 0
    for line_no, text in enumerate(lines[1:], start=2):
        obj = parse_line(line_no, text)
        tick = obj.get("tick_index")
        if isinstance(tick, bool) or not isinstance(tick, int) or tick < 0:
            raise CorruptLog(line_no, "tick_index missing or not a non-negative integer")
        has_msg = "message" in obj
        has_digest = "digest" in obj
        if has_msg == has_digest:
            raise CorruptLog(line_no, "record needs exactly one of message / digest")
        if tick < last_tick:
            raise CorruptLog(line_no, f"tick_index {tick} out of order (after {last_tick})")
        last_tick = tick
        if has_msg:
            if not isinstance(obj["message"], dict):
                raise CorruptLog(line_no, "message is not an object")
            records.append(LogRecord(line_no, tick, message_doc=obj["message"]))
        else:
            if not isinstance(obj["digest"], str):
                raise CorruptLog(line_no, "digest is not a string")
            records.append(LogRecord(line_no, tick, digest=obj["digest"]))
    return header, records


@dataclass(frozen=True)
class DigestMismatchInfo:
    tick_index: int
    recorded: str
    computed: str


@dataclass(frozen=True)
class ReplayResult:
    ticks: int
    final_digest: str
    separation_count: int
    digests: tuple[str, ...]  # computed, one per checkpoint (or per tick in free-run)
    checkpoints: int
    mismatch: Optional[DigestMismatchInfo] = None

    @property
    def ok(self) -> bool:
        return self.mismatch is None


def _config_from_header(header: dict) -> SessionConfig:
    defaults = SessionConfig()
    return SessionConfig(
        heartbeat_timeout_ticks=int(
            header.get("heartbeat_timeout_ticks", defaults.heartbeat_timeout_ticks)
        ),
        grace_ticks=int(header.get("grace_ticks", defaults.grace_ticks)),
        snapshot_interval=int(header.get("snapshot_interval", defaults.snapshot_interval)),
    )


def replay_log(path: str, scenario: Scenario, verify_digests: bool = True) -> ReplayResult:
    """Re-drive a recording through a fresh session, no transport involved.

    Checkpoint records mark tick boundaries: each one steps the session once
    and (optionally) compares world digests.  A recording without any
    checkpoints is treated as a bare input tape and free-runs the scenario
    for its full duration.
    """
    header, records = read_log(path)
    expected = scenario_digest(scenario)
    if header.get("scenario_digest") != expected:
        raise ScenarioMismatch(
            f"log was recorded against scenario {header.get('scenario_digest', '?')[:12]}, "
            f"got {expected[:12]}"
        )

    core = create_session(
        session_id=str(header.get("session_id", "replay")),
        block=proto.BlockConfig(block_id=str(header.get("block_id", "B1"))),
        scenario=scenario,
        config=_config_from_header(header),
    )

    digests: list[str] = []
    mismatch: Optional[DigestMismatchInfo] = None
    has_checkpoints = any(r.is_checkpoint for r in records)

    def handle(record: LogRecord) -> None:
        try:
            message = proto.message_from_doc(record.message_doc)
        except proto.DecodeError as exc:
            raise CorruptLog(record.line_no, f"unreplayable message: {exc}") from exc
        core.handle_message(message)

    if has_checkpoints:
        for record in records:
            if record.is_checkpoint:
                if record.tick_index == core.tick + 1:
                    core.run_tick()
                elif record.tick_index != core.tick:
                    raise CorruptLog(
                        record.line_no,
                        f"checkpoint at tick {record.tick_index} but session is at {core.tick}",
                    )
                computed = core.digest()
                digests.append(computed)
                if verify_digests and mismatch is None and computed != record.digest:
                    mismatch = DigestMismatchInfo(record.tick_index, record.digest, computed)
            else:
                if record.tick_index != core.tick:
                    raise CorruptLog(
                        record.line_no,
                        f"input at tick {record.tick_index} but session is at {core.tick}",
                    )
                handle(record)
    else:
        # Bare input tape: force the run and integrate the whole exercise.
        pending = list(records)
        core.phase = Phase.RUNNING
        digests.append(core.digest())
        while core.tick < scenario.duration_ticks and core.phase is Phase.RUNNING:
            while pending and pending[0].tick_index == core.tick:
                handle(pending.pop(0))
            core.run_tick()
            digests.append(core.digest())

    return ReplayResult(
        ticks=core.tick,
        final_digest=core.digest(),
        separation_count=core.separation_count,
        digests=tuple(digests),
        checkpoints=sum(1 for r in records if r.is_checkpoint),
        mismatch=mismatch,
    )
