/** Connection state machine for one browser station.
 *
 * Owns the transport, the join/resume handshake, 1 Hz heartbeats, the
 * picture digest chain, and auto-reconnect within the host's grace window.
 * Views subscribe to the assignable callbacks; everything runs on the
 * single UI thread, inbound frames applied in arrival order.
 */

import { DecodeError, decodeMessage, encodeMessage } from "../protocol/codec";
import { pictureDigest } from "../protocol/digest";
import { applyDelta, applyMirrorFrame, DigestMismatch, normalizePicture } from "../protocol/mirror";
import {
  Alert,
  ControlGrant,
  ControlInput,
  ControlRevoke,
  HEARTBEAT_INTERVAL_S,
  Payload,
  PictureAircraft,
  Pointer,
  Reject,
  Role,
  SeatInfo,
  StationId,
  StationKind,
  Transmission,
  Welcome,
  makeMessage,
  stationLabel,
} from "../protocol/messages";
import { Transport, TransportFactory } from "./transport";

export type ConnectionState = "idle" | "connecting" | "online" | "reconnecting" | "closed";

/** Reasons that end a resume attempt for good. */
const TERMINAL_REJECTS = new Set(["GRACE_EXPIRED", "STATION_REASSIGNED", "BAD_PHASE"]);

export interface JoinSpec {
  clientName: string;
  role: Role;
  blockId: string;
  stationKind: StationKind | null;
  stationIndex: number;
  scenarioName: string;
  token: string;
}

export interface Clock {
  setInterval(fn: () => void, ms: number): unknown;
  clearInterval(handle: unknown): void;
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

const REAL_CLOCK: Clock = {
  setInterval: (fn, ms) => setInterval(fn, ms),
  clearInterval: (h) => clearInterval(h as Parameters<typeof clearInterval>[0]),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]),
};

const RECONNECT_INTERVAL_MS = 1000;

export class Station {
  // -- subscription points -------------------------------------------------
  onConnection: ((state: ConnectionState, detail: string) => void) | null = null;
  onWelcome: ((w: Welcome) => void) | null = null;
  onReject: ((r: Reject) => void) | null = null;
  onPicture: ((picture: readonly PictureAircraft[], digest: string) => void) | null = null;
  onPhase: ((phase: string) => void) | null = null;
  onAlerts: ((alerts: readonly Alert[]) => void) | null = null;
  onSeats: ((seats: readonly SeatInfo[]) => void) | null = null;
  onPointer: ((p: Pointer) => void) | null = null;
  onGrant: ((g: ControlGrant) => void) | null = null;
  onRevoke: ((r: ControlRevoke) => void) | null = null;
  onControlInput: ((c: ControlInput) => void) | null = null;
  onTransmission: ((t: Transmission) => void) | null = null;
  onMirror: ((station: StationId, picture: readonly PictureAircraft[]) => void) | null = null;
  onBye: ((reason: string) => void) | null = null;

  // -- live state ------------------------------------------------------------
  state: ConnectionState = "idle";
  clientId = "";
  sessionId = "";
  station: StationId | null = null;
  picture: readonly PictureAircraft[] = [];
  digest = pictureDigest([]);
  phase = "";
  alerts: readonly Alert[] = [];
  seats: readonly SeatInfo[] = [];
  mirrors = new Map<string, readonly PictureAircraft[]>();

  private spec: JoinSpec;
  private factory: TransportFactory;
  private clock: Clock;
  private transport: Transport | null = null;
  private seq = 0;
  private heartbeatHandle: unknown = null;
  private reconnectHandle: unknown = null;
  private awaitingSnapshot = false;
  private closing = false;

  constructor(spec: JoinSpec, factory: TransportFactory, clock: Clock = REAL_CLOCK) {
    this.spec = spec;
    this.factory = factory;
    this.clock = clock;
  }

  connect(): void {
    this.closing = false;
    this.setState(this.clientId ? "reconnecting" : "connecting", "");
    const transport = this.factory();
    this.transport = transport;
    transport.onopen = () => this.sendHello();
    transport.onframe = (frame) => this.dispatch(frame);
    transport.onclose = (reason) => this.handleClose(transport, reason);
  }

  /** Leave deliberately; no reconnect. */
  close(reason = "console closed"): void {
    this.closing = true;
    this.stopTimers();
    if (this.transport && this.state === "online") {
      try {
        this.sendPayload({ tag: "BYE", reason });
      } catch {
        // Connection already failing; BYE is best-effort.
      }
    }
    this.transport?.close();
    this.transport = null;
    this.setState("closed", reason);
  }

  // -- outbound API ----------------------------------------------------------

  sendPilotCommand(text: string): void {
    this.sendPayload({ tag: "PILOT_CMD", text });
  }

  sendPointer(target: StationId, xNm: number, yNm: number, visible: boolean): void {
    this.sendPayload({
      tag: "POINTER",
      tutor_id: this.clientId,
      target_station: target,
      x_nm: xNm,
      y_nm: yNm,
      visible,
      shape: "CIRCLE",
      color: "RED",
    });
  }

  requestControl(target: StationId, active: boolean): void {
    this.sendPayload({
      tag: "CONTROL_GRANT",
      tutor_id: this.clientId,
      target_station: target,
      granted_at_tick: 0,
      active,
    });
  }

  sendControlInput(target: StationId, text: string): void {
    this.sendPayload({ tag: "CONTROL_INPUT", target_station: target, text });
  }

  sendTransmission(frequencyLabel: string, text: string): void {
    this.sendPayload({ tag: "TRANSMISSION", frequency_label: frequencyLabel, text });
  }

  sendSupervisorCmd(verb: string, args: Record<string, string> = {}): void {
    this.sendPayload({ tag: "SUPERVISOR_CMD", verb, args });
  }

  sendHeartbeat(resync = false): void {
    this.sendPayload({ tag: "HEARTBEAT", resync, picture_digest: this.digest });
  }

  // -- internals ---------------------------------------------------------------

  private sendHello(): void {
    this.sendPayload({
      tag: "HELLO",
      client_name: this.spec.clientName,
      desired_role: this.spec.role,
      block_id: this.spec.blockId,
      station_kind: this.clientId ? null : this.spec.stationKind,
      station_index: this.clientId ? 0 : this.spec.stationIndex,
      scenario_name: this.clientId ? "" : this.spec.scenarioName,
      token: this.spec.token,
      resume_client_id: this.clientId,
    });
  }

  private sendPayload(payload: Payload): void {
    if (!this.transport) {
      throw new Error("not connected");
    }
    this.seq += 1;
    this.transport.send(
      encodeMessage(makeMessage(this.clientId || this.spec.clientName, this.seq, payload, this.sessionId)),
    );
  }

  private dispatch(frame: string): void {
    let payload: Payload;
    try {
      payload = decodeMessage(frame).payload;
    } catch (exc) {
      if (exc instanceof DecodeError) {
        return; // Host never sends these; drop rather than crash the scope.
      }
      throw exc;
    }
    switch (payload.tag) {
      case "WELCOME":
        return this.handleWelcome(payload);
      case "REJECT":
        return this.handleReject(payload);
      case "STATE_SNAPSHOT": {
        this.awaitingSnapshot = false;
        this.picture = normalizePicture(payload.picture);
        this.digest = payload.picture_digest;
        this.phase = payload.phase;
        this.alerts = payload.alerts;
        this.seats = payload.seats;
        this.onPicture?.(this.picture, this.digest);
        this.onPhase?.(this.phase);
        this.onAlerts?.(this.alerts);
        this.onSeats?.(this.seats);
        return;
      }
      case "STATE_DELTA": {
        this.phase = payload.phase;
        this.alerts = payload.alerts;
        this.onPhase?.(this.phase);
        this.onAlerts?.(this.alerts);
        if (this.awaitingSnapshot) {
          return; // Resync requested; skip deltas until the snapshot lands.
        }
        try {
          this.picture = applyDelta(
            this.picture,
            payload.base_digest,
            payload.ops,
            payload.result_digest,
          );
          this.digest = payload.result_digest;
          this.onPicture?.(this.picture, this.digest);
        } catch (exc) {
          if (!(exc instanceof DigestMismatch)) throw exc;
          this.awaitingSnapshot = true;
          this.sendHeartbeat(true);
        }
        return;
      }
      case "MIRROR_FRAME": {
        const key = stationLabel(payload.target_station);
        const current = this.mirrors.get(key) ?? [];
        try {
          const next = applyMirrorFrame(current, payload);
          this.mirrors.set(key, next);
          this.onMirror?.(payload.target_station, next);
        } catch (exc) {
          if (!(exc instanceof DigestMismatch)) throw exc;
          this.sendHeartbeat(true); // Host resets the mirror and resnapshots.
        }
        return;
      }
      case "POINTER":
        return this.onPointer?.(payload) ?? undefined;
      case "CONTROL_GRANT":
        return this.onGrant?.(payload) ?? undefined;
      case "CONTROL_REVOKE":
        return this.onRevoke?.(payload) ?? undefined;
      case "CONTROL_INPUT":
        return this.onControlInput?.(payload) ?? undefined;
      case "TRANSMISSION":
        return this.onTransmission?.(payload) ?? undefined;
      case "BYE":
        this.closing = true;
        this.stopTimers();
        this.transport?.close();
        this.transport = null;
        this.setState("closed", payload.reason);
        this.onBye?.(payload.reason);
        return;
      default:
        return; // HELLO etc. are client-originated; a quiet drop is safe.
    }
  }

  private handleWelcome(w: Welcome): void {
    this.clientId = w.client_id;
    this.sessionId = w.session_id;
    this.station = w.station;
    this.awaitingSnapshot = false;
    this.setState("online", "");
    this.onWelcome?.(w);
    if (this.heartbeatHandle === null) {
      this.heartbeatHandle = this.clock.setInterval(
        () => this.sendHeartbeat(false),
        HEARTBEAT_INTERVAL_S * 1000,
      );
    }
  }

  private handleReject(r: Reject): void {
    this.onReject?.(r);
    if (this.state === "reconnecting" && TERMINAL_REJECTS.has(r.reason)) {
      this.closing = true;
      this.stopTimers();
      this.transport?.close();
      this.transport = null;
      this.setState("closed", `${r.reason}: ${r.detail}`);
    }
  }

  private handleClose(transport: Transport, reason: string): void {
    if (transport !== this.transport) {
      return; // A superseded connection; ignore its close.
    }
    this.transport = null;
    this.stopHeartbeat();
    if (this.closing || this.state === "closed") {
      return;
    }
    if (!this.clientId) {
      this.setState("closed", reason || "connection failed");
      return;
    }
    // Dropped mid-session: retry with the resume id until the host accepts
    // or declares the grace window expired.
    this.setState("reconnecting", reason || "connection lost");
    this.scheduleReconnect();
  }

  private scheduleReconnect(): void {
    if (this.reconnectHandle !== null || this.closing) {
      return;
    }
    this.reconnectHandle = this.clock.setTimeout(() => {
      this.reconnectHandle = null;
      if (this.state === "reconnecting" && !this.transport) {
        this.connect();
      }
    }, RECONNECT_INTERVAL_MS);
  }

  private setState(state: ConnectionState, detail: string): void {
    this.state = state;
    this.onConnection?.(state, detail);
    if (state === "reconnecting" && !this.transport) {
      this.scheduleReconnect();
    }
  }

  private stopHeartbeat(): void {
    if (this.heartbeatHandle !== null) {
      this.clock.clearInterval(this.heartbeatHandle);
      this.heartbeatHandle = null;
    }
  }

  private stopTimers(): void {
    this.stopHeartbeat();
    if (this.reconnectHandle !== null) {
      this.clock.clearTimeout(this.reconnectHandle);
      this.reconnectHandle = null;
    }
  }
}
