/** Wire-format types for the exercise host's framed-JSON protocol.
 *
 * These mirror the host's message schema exactly; the codec in codec.ts
 * enforces the same field and domain rules the server does, so anything
 * this package encodes is accepted on the wire.
 */

export const PROTOCOL_VERSION = 1;

export const MAX_CONTROLLER_STATIONS = 10;
export const MAX_PILOT_STATIONS = 10;
export const MAX_SUPERVISORS = 1;
export const POINTER_MAX_HZ = 10.0;
export const HEARTBEAT_INTERVAL_S = 1.0;

/** Reject reasons surfaced verbatim in the UI. */
export const R_VERSION = "VERSION";
export const R_MALFORMED = "MALFORMED";
export const R_BLOCK_FULL = "BLOCK_FULL";
export const R_STATION_TAKEN = "STATION_TAKEN";
export const R_NO_SUCH_SESSION = "NO_SUCH_SESSION";
export const R_GRACE_EXPIRED = "GRACE_EXPIRED";
export const R_STATION_REASSIGNED = "STATION_REASSIGNED";
export const R_BAD_PHASE = "BAD_PHASE";
export const R_UNKNOWN_CALLSIGN = "UNKNOWN_CALLSIGN";
export const R_NOT_ATTACHED = "NOT_ATTACHED";
export const R_GRANT_EXISTS = "GRANT_EXISTS";
export const R_SYNTAX = "SYNTAX";
export const R_DOMAIN = "DOMAIN";
export const R_NOT_ALLOWED = "NOT_ALLOWED";

export type Role =
  | "CONTROLLER"
  | "COORDINATOR"
  | "PSEUDO_PILOT"
  | "SUPERVISOR"
  | "REMOTE_TUTOR";

export const ROLES: readonly Role[] = [
  "CONTROLLER",
  "COORDINATOR",
  "PSEUDO_PILOT",
  "SUPERVISOR",
  "REMOTE_TUTOR",
];

export type StationKind = "CONTROLLER_STN" | "PILOT_STN" | "SUPERVISOR_STN";

export const STATION_KINDS: readonly StationKind[] = [
  "CONTROLLER_STN",
  "PILOT_STN",
  "SUPERVISOR_STN",
];

export interface StationId {
  block_id: string;
  kind: StationKind;
  index: number; // 1-based
}

export function stationLabel(s: StationId): string {
  const prefix = { CONTROLLER_STN: "C", PILOT_STN: "P", SUPERVISOR_STN: "SUP" }[s.kind];
  const seat = `${prefix}${s.index}`;
  return s.block_id ? `${s.block_id}/${seat}` : seat;
}

export function sameStation(a: StationId | null, b: StationId | null): boolean {
  return (
    a !== null &&
    b !== null &&
    a.block_id === b.block_id &&
    a.kind === b.kind &&
    a.index === b.index
  );
}

export interface PictureAircraft {
  callsign: string;
  x_nm: number;
  y_nm: number;
  alt_ft: number;
  heading_deg: number;
  ground_speed_kt: number;
}

/** Canonical picture value: unique callsigns, sorted. */
export type Picture = readonly PictureAircraft[];

export type MirrorOp =
  | { op: "ADD"; aircraft: PictureAircraft }
  | { op: "REMOVE"; callsign: string }
  | {
      op: "MOVE";
      callsign: string;
      x_nm: number;
      y_nm: number;
      alt_ft: number;
      heading_deg: number;
      ground_speed_kt: number;
    };

export interface Alert {
  kind: string; // SEPARATION, EMERGENCY_DECLARED, RADIO_FAILURE, GO_AROUND
  callsigns: readonly string[];
  detail: string;
}

export interface SeatInfo {
  kind: StationKind;
  index: number;
  client_id: string;
  role: Role;
}

export interface Hello {
  tag: "HELLO";
  client_name: string;
  desired_role: Role;
  block_id: string;
  station_kind: StationKind | null;
  station_index: number; // 0 = no preference
  scenario_name: string;
  token: string;
  resume_client_id: string; // non-empty = reconnection attempt
}

export interface Welcome {
  tag: "WELCOME";
  client_id: string;
  role: Role;
  session_id: string;
  block_id: string;
  station: StationId | null;
  tick_index: number;
}

export interface Reject {
  tag: "REJECT";
  reason: string;
  detail: string;
}

export interface StateSnapshot {
  tag: "STATE_SNAPSHOT";
  picture: Picture;
  picture_digest: string;
  phase: string;
  alerts: readonly Alert[];
  seats: readonly SeatInfo[];
}

export interface StateDelta {
  tag: "STATE_DELTA";
  base_digest: string;
  ops: readonly MirrorOp[];
  result_digest: string;
  phase: string;
  alerts: readonly Alert[];
}

export interface PilotCmd {
  tag: "PILOT_CMD";
  text: string;
}

export interface MirrorFrame {
  tag: "MIRROR_FRAME";
  target_station: StationId;
  base_digest: string;
  ops: readonly MirrorOp[] | null;
  full_snapshot: Picture | null; // exactly one of ops / full_snapshot is set
  result_digest: string;
}

export interface Pointer {
  tag: "POINTER";
  tutor_id: string;
  target_station: StationId;
  x_nm: number;
  y_nm: number;
  visible: boolean;
  shape: "CIRCLE"; // overlay shape and color are fixed
  color: "RED";
}

export interface ControlGrant {
  tag: "CONTROL_GRANT";
  tutor_id: string;
  target_station: StationId;
  granted_at_tick: number;
  active: boolean;
}

export interface ControlRevoke {
  tag: "CONTROL_REVOKE";
  tutor_id: string;
  target_station: StationId;
}

export interface ControlInput {
  tag: "CONTROL_INPUT";
  target_station: StationId;
  text: string; // pilot-command grammar, executed with tutor attribution
}

export interface Transmission {
  tag: "TRANSMISSION";
  frequency_label: string;
  text: string;
}

export interface SupervisorCmd {
  tag: "SUPERVISOR_CMD";
  verb: string; // LOAD_SCENARIO, START, PAUSE, RESUME, STOP, INJECT_EVENT
  args: Readonly<Record<string, string>>;
}

export interface Heartbeat {
  tag: "HEARTBEAT";
  resync: boolean; // true requests a full picture snapshot
  picture_digest: string;
}

export interface Bye {
  tag: "BYE";
  reason: string;
}

export type Payload =
  | Hello
  | Welcome
  | Reject
  | StateSnapshot
  | StateDelta
  | PilotCmd
  | MirrorFrame
  | Pointer
  | ControlGrant
  | ControlRevoke
  | ControlInput
  | Transmission
  | SupervisorCmd
  | Heartbeat
  | Bye;

export type Tag = Payload["tag"];

export interface Message {
  protocol_version: number;
  seq: number; // strictly increasing per sender
  sent_at_tick: number;
  session_id: string;
  sender: string;
  payload: Payload;
}

export function makeMessage(
  sender: string,
  seq: number,
  payload: Payload,
  sessionId = "",
  tick = 0,
): Message {
  return {
    protocol_version: PROTOCOL_VERSION,
    seq,
    sent_at_tick: tick,
    session_id: sessionId,
    sender,
    payload,
  };
}
