"""Networked exercise host: WebSocket transport around SessionCore.

Concurrency contract: connection handler threads only decode frames and
enqueue them; one executor thread owns every session (state, event log,
outbound fan-out) and also drives the tick clocks.  Transport disconnects
are deliberately not session inputs — seats are freed by tick-based
heartbeat timeouts, which the recorded message stream reproduces — so a
recording replays to identical state without any network.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http import HTTPStatus
from pathlib import Path
from typing import Optional

from websockets.exceptions import ConnectionClosed
from websockets.sync.server import Server, ServerConnection, serve

from . import protocol as proto
from .eventlog import LOG_SUFFIX, EventLogWriter, make_header
from .scenario import Scenario, parse_scenario
from .session import (
    HOST_SENDER,
    TO_SENDER,
    InvalidScenarioError,
    Phase,
    SessionConfig,
    SessionCore,
    create_session,
)

logger = logging.getLogger(__name__)

DEFAULT_PORT = 8750

# Outbound frames queued per connection before the oldest are dropped.  A
# consumer this far behind is better served by a digest mismatch and resync
# than by stalling the executor.
OUTBOUND_QUEUE_LIMIT = 1024


@dataclass
class _LiveSession:
    core: SessionCore
    writer: EventLogWriter
    log_path: Path
    conns: dict[str, ServerConnection] = field(default_factory=dict)
    next_due: float = field(default_factory=time.monotonic)


class _ConnWriter:
    """Owns all writes to one connection, so a slow or wedged socket can
    never block the executor thread."""

    def __init__(self, conn: ServerConnection):
        self.conn = conn
        self.queue: queue.Queue = queue.Queue(maxsize=OUTBOUND_QUEUE_LIMIT)
        self._stopped = False
        self.thread = threading.Thread(target=self._run, name="conn-writer", daemon=True)
        self.thread.start()

    def send(self, frame: str) -> None:
        try:
            self.queue.put_nowait(frame)
        except queue.Full:
            pass  # drop; the receiver resyncs off its next full snapshot

    def stop(self) -> None:
        self._stopped = True
        try:
            self.queue.put_nowait(None)
        except queue.Full:
            pass  # the thread is wedged on a dead socket; it is a daemon

    def _run(self) -> None:
        while True:
            frame = self.queue.get()
            if frame is None or self._stopped:
                return
            try:
                self.conn.send(frame)
            except (ConnectionClosed, OSError):
                return


class HostServer:
    """One process hosting N cloneable blocks, one active session each."""

    def __init__(
        self,
        port: int = DEFAULT_PORT,
        scenario_dir: str = ".",
        blocks: int = 1,
        host: str = "127.0.0.1",
        log_dir: str = "logs",
        session_config: SessionConfig = SessionConfig(),
    ):
        if blocks < 1:
            raise ValueError("need at least one block")
        self.host = host
        self.port = port
        self.log_dir = Path(log_dir)
        self.session_config = session_config
        self.scenarios = _load_scenario_dir(scenario_dir)

        template = proto.BlockConfig(block_id="B1")
        self.blocks: dict[str, proto.BlockConfig] = {"B1": template}
        for i in range(2, blocks + 1):
            clone = proto.clone_block(template, f"B{i}", self.blocks)
            self.blocks[clone.block_id] = clone

        self.sessions: dict[str, _LiveSession] = {}  # by block id
        self._by_session_id: dict[str, _LiveSession] = {}
        self._writers: dict[ServerConnection, _ConnWriter] = {}
        self._writers_lock = threading.Lock()
        self._inbox: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._server: Optional[Server] = None
        self._executor: Optional[threading.Thread] = None
        self._serve_thread: Optional[threading.Thread] = None
        self._out_seq = 0
        self._out_seq_lock = threading.Lock()
        self._session_counter = 0
        self._started_at = time.monotonic()
        self.max_tick_processing_s = 0.0

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        """Bind and run; raises OSError if the port is taken."""
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self._server = serve(
            self._handler, self.host, self.port, process_request=self._process_request
        )
        self.port = self._server.socket.getsockname()[1]
        self._started_at = time.monotonic()
        self._serve_thread = threading.Thread(
            target=self._server.serve_forever, name="transport", daemon=True
        )
        self._serve_thread.start()
        self._executor = threading.Thread(target=self._run_executor, name="executor", daemon=True)
        self._executor.start()
        logger.info("host listening on %s:%d, %d block(s)", self.host, self.port, len(self.blocks))

    def stop(self) -> None:
        if self._stop.is_set():
            return
        self._stop.set()
        if self._executor:
            self._executor.join(timeout=5)
        for live in list(self.sessions.values()):
            live.writer.close()
        with self._writers_lock:
            writers = list(self._writers.values())
            self._writers.clear()
        for writer in writers:
            writer.stop()
        if self._server:
            self._server.shutdown()
        if self._serve_thread:
            self._serve_thread.join(timeout=5)
        logger.info("host stopped")

    def wait(self) -> None:
        while not self._stop.is_set():
            time.sleep(0.1)

    # -- transport threads ------------------------------------------------------

    def _process_request(self, connection, request):
        if request.path == "/healthz":
            body = json.dumps(
                {
                    "sessions": len(self.sessions),
                    "blocks": len(self.blocks),
                    "uptime_s": round(time.monotonic() - self._started_at, 3),
                    "max_tick_processing_s": round(self.max_tick_processing_s, 6),
                }
            )
            return connection.respond(HTTPStatus.OK, body + "\n")
        return None

    def _host_message(self, payload, session_id: str = "", tick: int = 0) -> proto.Message:
        with self._out_seq_lock:
            self._out_seq += 1
            seq = self._out_seq
        return proto.make_message(HOST_SENDER, seq, payload, session_id=session_id, tick=tick)

    def _writer_for(self, conn: ServerConnection) -> _ConnWriter:
        with self._writers_lock:
            writer = self._writers.get(conn)
            if writer is None:
                writer = self._writers[conn] = _ConnWriter(conn)
            return writer

    def _send_frame(self, conn: ServerConnection, frame: str) -> None:
        self._writer_for(conn).send(frame)

    def _send_direct(self, conn: ServerConnection, payload) -> None:
        self._send_frame(conn, proto.encode_message(self._host_message(payload)))

    def _handler(self, conn: ServerConnection) -> None:
        try:
            for raw in conn:
                try:
                    msg = proto.decode_message(raw)
                except proto.VersionError as exc:
                    self._send_direct(conn, proto.Reject(proto.R_VERSION, str(exc)))
                    continue
                except proto.DecodeError as exc:
                    self._send_direct(conn, proto.Reject(proto.R_MALFORMED, str(exc)))
                    continue
                self._inbox.put((conn, msg))
        finally:
            # connection closed: not a session input; liveness frees the seat
            with self._writers_lock:
                writer = self._writers.pop(conn, None)
            if writer is not None:
                writer.stop()

    # -- executor thread ----------------------------------------------------------

    def _run_executor(self) -> None:
        while not self._stop.is_set():
            try:
                item = self._inbox.get(timeout=0.005)
            except queue.Empty:
                item = None
            if item is not None:
                try:
                    self._process(*item)
                except Exception:
                    logger.exception("failed to process inbound message")
            now = time.monotonic()
            for live in list(self.sessions.values()):
                if now >= live.next_due:
                    interval = live.core.scenario.tick_seconds
                    live.next_due = max(live.next_due + interval, now)
                    self._tick(live)

    def _tick(self, live: _LiveSession) -> None:
        t0 = time.perf_counter()
        before_tick = live.core.tick
        before_phase = live.core.phase
        sends = live.core.run_tick()
        if live.core.tick != before_tick:
            live.writer.append_checkpoint(live.core.tick, live.core.digest())
        self._dispatch(live, None, sends)
        if live.core.phase is not before_phase:
            live.writer.sync()
        elapsed = time.perf_counter() - t0
        if elapsed > self.max_tick_processing_s:
            self.max_tick_processing_s = elapsed

    def _process(self, conn: ServerConnection, msg: proto.Message) -> None:
        payload = msg.payload
        if isinstance(payload, proto.Hello):
            self._process_hello(conn, msg)
            return
        live = self._by_session_id.get(msg.session_id)
        if live is None:
            self._send_direct(
                conn, proto.Reject(proto.R_NO_SUCH_SESSION, f"no session {msg.session_id!r}")
            )
            return
        if isinstance(payload, proto.SupervisorCmd) and payload.verb == "LOAD_SCENARIO":
            self._reload_session(live, conn, msg)
            return
        self._route(live, conn, msg)

    def _process_hello(self, conn: ServerConnection, msg: proto.Message) -> None:
        hello: proto.Hello = msg.payload
        block_id = hello.block_id or "B1"
        if block_id not in self.blocks:
            self._send_direct(conn, proto.Reject(proto.R_NO_SUCH_BLOCK, f"no block {block_id!r}"))
            return
        live = self.sessions.get(block_id)
        if live is not None and live.core.phase is Phase.ENDED and not hello.resume_client_id:
            live = None  # an ended exercise does not block the next one
        wants_create = hello.desired_role is proto.Role.SUPERVISOR and hello.scenario_name
        if live is None:
            if not wants_create:
                self._send_direct(
                    conn,
                    proto.Reject(
                        proto.R_NO_SUCH_SESSION, f"no exercise loaded on block {block_id}"
                    ),
                )
                return
            live = self._create_session(conn, block_id, hello.scenario_name)
            if live is None:
                return  # reject already sent
        elif wants_create:
            self._send_direct(
                conn,
                proto.Reject(
                    proto.R_BLOCK_BUSY,
                    f"block {block_id} already runs session {live.core.session_id}",
                ),
            )
            return
        self._route(live, conn, msg)

    def _create_session(
        self, conn: ServerConnection, block_id: str, scenario_name: str
    ) -> Optional[_LiveSession]:
        scenario = self.scenarios.get(scenario_name)
        if scenario is None:
            self._send_direct(
                conn, proto.Reject(proto.R_NO_SUCH_SCENARIO, f"no scenario {scenario_name!r}")
            )
            return None
        self._session_counter += 1
        session_id = f"{block_id}-s{self._session_counter}"
        try:
            core = create_session(
                session_id, self.blocks[block_id], scenario, self.session_config
            )
        except InvalidScenarioError as exc:
            self._send_direct(conn, proto.Reject(proto.R_INVALID_SCENARIO, str(exc)))
            return None
        log_path = self.log_dir / f"{session_id}{LOG_SUFFIX}"
        writer = EventLogWriter(
            str(log_path),
            make_header(
                session_id,
                block_id,
                scenario,
                self.session_config,
                datetime.now(timezone.utc).isoformat(),
            ),
        )
        writer.append_checkpoint(0, core.digest())
        live = _LiveSession(core=core, writer=writer, log_path=log_path)
        old = self.sessions.get(block_id)
        if old is not None:
            old.writer.close()
            self._by_session_id.pop(old.core.session_id, None)
        self.sessions[block_id] = live
        self._by_session_id[session_id] = live
        logger.info("session %s created for scenario %r", session_id, scenario_name)
        return live

    def _route(self, live: _LiveSession, conn: Optional[ServerConnection], msg: proto.Message):
        """Log one inbound message, apply it, transmit the responses."""
        before_phase = live.core.phase
        live.writer.append_entry(live.core.tick, msg)
        sends = live.core.handle_message(msg)
        self._dispatch(live, conn, sends)
        if live.core.phase is not before_phase:
            live.writer.sync()
        return sends

    def _dispatch(
        self, live: _LiveSession, conn: Optional[ServerConnection], sends: list[proto.Send]
    ) -> None:
        for send in sends:
            if isinstance(send.message.payload, proto.Welcome) and conn is not None:
                live.conns[send.message.payload.client_id] = conn
            target = conn if send.to == TO_SENDER else live.conns.get(send.to)
            if target is None:
                continue
            self._send_frame(target, proto.encode_message(send.message))

    def _reload_session(
        self, live: _LiveSession, conn: ServerConnection, msg: proto.Message
    ) -> None:
        """LOAD_SCENARIO: replace the block's session, carrying seats over."""
        core = live.core
        issuer = core.clients.get(msg.sender)
        if issuer is None or issuer.role is not proto.Role.SUPERVISOR:
            self._send_direct(conn, proto.Reject(proto.R_NOT_SUPERVISOR, "supervisor required"))
            return
        if core.phase is not Phase.LOBBY:
            self._send_direct(
                conn, proto.Reject(proto.R_BAD_PHASE, "scenario can only change in the lobby")
            )
            return
        name = msg.payload.arg("scenario_name")
        block_id = core.block.block_id
        fresh = self._create_session(conn, block_id, name)
        if fresh is None:
            return
        carried = sorted(core.clients.values(), key=lambda c: int(c.client_id[2:]))
        for info in carried:
            old_conn = live.conns.get(info.client_id)
            if old_conn is None:
                continue
            synth = proto.make_message(
                sender=info.client_id,
                seq=1,
                payload=proto.Hello(
                    client_name=info.name,
                    desired_role=info.role,
                    block_id=block_id,
                    station_index=info.station.index if info.station else 0,
                ),
                session_id=fresh.core.session_id,
            )
            self._route(fresh, old_conn, synth)


def _load_scenario_dir(scenario_dir: str) -> dict[str, Scenario]:
    root = Path(scenario_dir)
    if not root.is_dir():
        raise NotADirectoryError(f"scenario directory {scenario_dir!r} is not readable")
    library: dict[str, Scenario] = {}
    for path in sorted(root.glob("*.json")):
        try:
            library[path.stem] = parse_scenario(path.read_bytes())
        except ValueError as exc:
            logger.warning("skipping %s: %s", path.name, exc)
    return library
