/** Strict codec for the framed-JSON wire format.
 *
 * Decoding applies the same shape, type, and domain checks as the host, so
 * a frame that decodes here decodes there and vice versa.  Encoding sorts
 * object keys and rejects non-finite numbers, so every frame this client
 * emits is valid on the wire by construction.
 */

import {
  Alert,
  MAX_CONTROLLER_STATIONS,
  MAX_PILOT_STATIONS,
  MAX_SUPERVISORS,
  Message,
  MirrorOp,
  Payload,
  PictureAircraft,
  PROTOCOL_VERSION,
  Role,
  ROLES,
  SeatInfo,
  StationId,
  StationKind,
  STATION_KINDS,
} from "./messages";

export class DecodeError extends Error {}

export class VersionError extends DecodeError {}

const KIND_CAPACITY: Record<StationKind, number> = {
  CONTROLLER_STN: MAX_CONTROLLER_STATIONS,
  PILOT_STN: MAX_PILOT_STATIONS,
  SUPERVISOR_STN: MAX_SUPERVISORS,
};

type Json = unknown;

function asObject(v: Json, where: string): Record<string, Json> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    throw new DecodeError(`${where}: expected object`);
  }
  return v as Record<string, Json>;
}

function asArray(v: Json, where: string): Json[] {
  if (!Array.isArray(v)) {
    throw new DecodeError(`${where}: expected array`);
  }
  return v;
}

function asString(v: Json, where: string): string {
  if (typeof v !== "string") {
    throw new DecodeError(`${where}: expected string`);
  }
  return v;
}

function asInt(v: Json, where: string): number {
  if (typeof v !== "number" || !Number.isInteger(v)) {
    throw new DecodeError(`${where}: expected integer`);
  }
  return v;
}

function asNum(v: Json, where: string): number {
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new DecodeError(`${where}: expected number`);
  }
  return v;
}

function asBool(v: Json, where: string): boolean {
  if (typeof v !== "boolean") {
    throw new DecodeError(`${where}: expected boolean`);
  }
  return v;
}

function roleFrom(v: Json, where: string): Role {
  const text = asString(v, where);
  if (!ROLES.includes(text as Role)) {
    throw new DecodeError(`${where}: unknown role '${text}'`);
  }
  return text as Role;
}

function kindFrom(v: Json, where: string): StationKind {
  const text = asString(v, where);
  if (!STATION_KINDS.includes(text as StationKind)) {
    throw new DecodeError(`${where}: unknown station kind '${text}'`);
  }
  return text as StationKind;
}

function stationFrom(v: Json, where: string): StationId | null {
  if (v === null || v === undefined) {
    return null;
  }
  const d = asObject(v, where);
  const kind = kindFrom(d["kind"], `${where}.kind`);
  const index = asInt(d["index"], `${where}.index`);
  const cap = KIND_CAPACITY[kind];
  if (index < 1 || index > cap) {
    throw new DecodeError(`${where}: ${kind} index ${index} outside 1..${cap}`);
  }
  return { block_id: asString(d["block_id"], `${where}.block_id`), kind, index };
}

function requiredStation(v: Json, where: string): StationId {
  const station = stationFrom(v, where);
  if (station === null) {
    throw new DecodeError(`${where}: required`);
  }
  return station;
}

function aircraftFrom(v: Json, where: string): PictureAircraft {
  const d = asObject(v, where);
  return {
    callsign: asString(d["callsign"], `${where}.callsign`),
    x_nm: asNum(d["x_nm"], `${where}.x_nm`),
    y_nm: asNum(d["y_nm"], `${where}.y_nm`),
    alt_ft: asNum(d["alt_ft"], `${where}.alt_ft`),
    heading_deg: asNum(d["heading_deg"], `${where}.heading_deg`),
    ground_speed_kt: asNum(d["ground_speed_kt"], `${where}.ground_speed_kt`),
  };
}

function opFrom(v: Json, where: string): MirrorOp {
  const d = asObject(v, where);
  const kind = d["op"];
  if (kind === "ADD") {
    return { op: "ADD", aircraft: aircraftFrom(d["aircraft"], `${where}.aircraft`) };
  }
  if (kind === "REMOVE") {
    return { op: "REMOVE", callsign: asString(d["callsign"], `${where}.callsign`) };
  }
  if (kind === "MOVE") {
    return {
      op: "MOVE",
      callsign: asString(d["callsign"], `${where}.callsign`),
      x_nm: asNum(d["x_nm"], `${where}.x_nm`),
      y_nm: asNum(d["y_nm"], `${where}.y_nm`),
      alt_ft: asNum(d["alt_ft"], `${where}.alt_ft`),
      heading_deg: asNum(d["heading_deg"], `${where}.heading_deg`),
      ground_speed_kt: asNum(d["ground_speed_kt"], `${where}.ground_speed_kt`),
    };
  }
  throw new DecodeError(`${where}.op: unknown mirror op '${String(kind)}'`);
}

function alertFrom(v: Json, where: string): Alert {
  const d = asObject(v, where);
  return {
    kind: asString(d["kind"], `${where}.kind`),
    callsigns: asArray(d["callsigns"] ?? [], `${where}.callsigns`).map((c, i) =>
      asString(c, `${where}.callsigns[${i}]`),
    ),
    detail: asString(d["detail"] ?? "", `${where}.detail`),
  };
}

function seatFrom(v: Json, where: string): SeatInfo {
  const d = asObject(v, where);
  return {
    kind: kindFrom(d["kind"], `${where}.kind`),
    index: asInt(d["index"], `${where}.index`),
    client_id: asString(d["client_id"], `${where}.client_id`),
    role: roleFrom(d["role"], `${where}.role`),
  };
}

function pictureFrom(v: Json, where: string): PictureAircraft[] {
  return asArray(v, where).map((a, i) => aircraftFrom(a, `${where}[${i}]`));
}

function opsFrom(v: Json, where: string): MirrorOp[] {
  return asArray(v, where).map((op, i) => opFrom(op, `${where}[${i}]`));
}

function alertsFrom(v: Json, where: string): Alert[] {
  return asArray(v, where).map((a, i) => alertFrom(a, `${where}[${i}]`));
}

function payloadFrom(v: Json): Payload {
  const d = asObject(v, "payload");
  const tag = d["tag"];
  if (typeof tag !== "string") {
    throw new DecodeError("payload.tag: missing or not a string");
  }
  const w = `payload(${tag})`;
  switch (tag) {
    case "HELLO": {
      const kindValue = d["station_kind"];
      return {
        tag,
        client_name: asString(d["client_name"] ?? "", `${w}.client_name`),
        desired_role: roleFrom(d["desired_role"], `${w}.desired_role`),
        block_id: asString(d["block_id"] ?? "", `${w}.block_id`),
        station_kind:
          kindValue === null || kindValue === undefined
            ? null
            : kindFrom(kindValue, `${w}.station_kind`),
        station_index: asInt(d["station_index"] ?? 0, `${w}.station_index`),
        scenario_name: asString(d["scenario_name"] ?? "", `${w}.scenario_name`),
        token: asString(d["token"] ?? "", `${w}.token`),
        resume_client_id: asString(d["resume_client_id"] ?? "", `${w}.resume_client_id`),
      };
    }
    case "WELCOME":
      return {
        tag,
        client_id: asString(d["client_id"], `${w}.client_id`),
        role: roleFrom(d["role"], `${w}.role`),
        session_id: asString(d["session_id"] ?? "", `${w}.session_id`),
        block_id: asString(d["block_id"] ?? "", `${w}.block_id`),
        station: stationFrom(d["station"], `${w}.station`),
        tick_index: asInt(d["tick_index"] ?? 0, `${w}.tick_index`),
      };
    case "REJECT":
      return {
        tag,
        reason: asString(d["reason"], `${w}.reason`),
        detail: asString(d["detail"] ?? "", `${w}.detail`),
      };
    case "STATE_SNAPSHOT":
      return {
        tag,
        picture: pictureFrom(d["picture"] ?? [], `${w}.picture`),
        picture_digest: asString(d["picture_digest"], `${w}.picture_digest`),
        phase: asString(d["phase"] ?? "", `${w}.phase`),
        alerts: alertsFrom(d["alerts"] ?? [], `${w}.alerts`),
        seats: asArray(d["seats"] ?? [], `${w}.seats`).map((s, i) =>
          seatFrom(s, `${w}.seats[${i}]`),
        ),
      };
    case "STATE_DELTA":
      return {
        tag,
        base_digest: asString(d["base_digest"], `${w}.base_digest`),
        ops: opsFrom(d["ops"] ?? [], `${w}.ops`),
        result_digest: asString(d["result_digest"], `${w}.result_digest`),
        phase: asString(d["phase"] ?? "", `${w}.phase`),
        alerts: alertsFrom(d["alerts"] ?? [], `${w}.alerts`),
      };
    case "PILOT_CMD":
      return { tag, text: asString(d["text"], `${w}.text`) };
    case "MIRROR_FRAME": {
      const opsValue = d["ops"];
      const snapValue = d["full_snapshot"];
      const ops =
        opsValue === null || opsValue === undefined ? null : opsFrom(opsValue, `${w}.ops`);
      const snapshot =
        snapValue === null || snapValue === undefined
          ? null
          : pictureFrom(snapValue, `${w}.full_snapshot`);
      if ((ops === null) === (snapshot === null)) {
        throw new DecodeError(`${w}: exactly one of ops / full_snapshot must be present`);
      }
      return {
        tag,
        target_station: requiredStation(d["target_station"], `${w}.target_station`),
        base_digest: asString(d["base_digest"] ?? "", `${w}.base_digest`),
        ops,
        full_snapshot: snapshot,
        result_digest: asString(d["result_digest"] ?? "", `${w}.result_digest`),
      };
    }
    case "POINTER": {
      const shape = asString(d["shape"] ?? "CIRCLE", `${w}.shape`);
      const color = asString(d["color"] ?? "RED", `${w}.color`);
      if (shape !== "CIRCLE" || color !== "RED") {
        throw new DecodeError(`${w}: pointer overlay shape/color are fixed to RED CIRCLE`);
      }
      return {
        tag,
        tutor_id: asString(d["tutor_id"], `${w}.tutor_id`),
        target_station: requiredStation(d["target_station"], `${w}.target_station`),
        x_nm: asNum(d["x_nm"], `${w}.x_nm`),
        y_nm: asNum(d["y_nm"], `${w}.y_nm`),
        visible: asBool(d["visible"], `${w}.visible`),
        shape: "CIRCLE",
        color: "RED",
      };
    }
    case "CONTROL_GRANT":
      return {
        tag,
        tutor_id: asString(d["tutor_id"], `${w}.tutor_id`),
        target_station: requiredStation(d["target_station"], `${w}.target_station`),
        granted_at_tick: asInt(d["granted_at_tick"] ?? 0, `${w}.granted_at_tick`),
        active: asBool(d["active"], `${w}.active`),
      };
    case "CONTROL_REVOKE":
      return {
        tag,
        tutor_id: asString(d["tutor_id"], `${w}.tutor_id`),
        target_station: requiredStation(d["target_station"], `${w}.target_station`),
      };
    case "CONTROL_INPUT":
      return {
        tag,
        target_station: requiredStation(d["target_station"], `${w}.target_station`),
        text: asString(d["text"], `${w}.text`),
      };
    case "TRANSMISSION":
      return {
        tag,
        frequency_label: asString(d["frequency_label"] ?? "", `${w}.frequency_label`),
        text: asString(d["text"], `${w}.text`),
      };
    case "SUPERVISOR_CMD": {
      const args = asObject(d["args"] ?? {}, `${w}.args`);
      const out: Record<string, string> = {};
      for (const key of Object.keys(args).sort()) {
        out[key] = asString(args[key], `${w}.args.${key}`);
      }
      return { tag, verb: asString(d["verb"], `${w}.verb`), args: out };
    }
    case "HEARTBEAT":
      return {
        tag,
        resync: asBool(d["resync"] ?? false, `${w}.resync`),
        picture_digest: asString(d["picture_digest"] ?? "", `${w}.picture_digest`),
      };
    case "BYE":
      return { tag, reason: asString(d["reason"] ?? "", `${w}.reason`) };
    default:
      throw new DecodeError(`unknown payload tag '${tag}'`);
  }
}

export function messageFromDoc(doc: Json): Message {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new DecodeError("frame must be a JSON object");
  }
  const d = doc as Record<string, Json>;
  const version = asInt(d["protocol_version"], "protocol_version");
  if (version !== PROTOCOL_VERSION) {
    throw new VersionError(`protocol version ${version}, expected ${PROTOCOL_VERSION}`);
  }
  return {
    protocol_version: version,
    seq: asInt(d["seq"], "seq"),
    sent_at_tick: asInt(d["sent_at_tick"] ?? 0, "sent_at_tick"),
    session_id: asString(d["session_id"] ?? "", "session_id"),
    sender: asString(d["sender"], "sender"),
    payload: payloadFrom(d["payload"]),
  };
}

export function decodeMessage(frame: string): Message {
  let doc: Json;
  try {
    doc = JSON.parse(frame);
  } catch (exc) {
    throw new DecodeError(`frame is not JSON: ${String(exc)}`);
  }
  return messageFromDoc(doc);
}

// --- encoding ----------------------------------------------------------------

function finite(x: number, where: string): number {
  if (typeof x !== "number" || !Number.isFinite(x)) {
    throw new TypeError(`${where}: refusing to encode non-finite number`);
  }
  return x;
}

function integer(x: number, where: string): number {
  finite(x, where);
  if (!Number.isInteger(x)) {
    throw new TypeError(`${where}: refusing to encode non-integer`);
  }
  return x;
}

function aircraftDoc(a: PictureAircraft, where: string): Record<string, Json> {
  return {
    callsign: a.callsign,
    x_nm: finite(a.x_nm, `${where}.x_nm`),
    y_nm: finite(a.y_nm, `${where}.y_nm`),
    alt_ft: finite(a.alt_ft, `${where}.alt_ft`),
    heading_deg: finite(a.heading_deg, `${where}.heading_deg`),
    ground_speed_kt: finite(a.ground_speed_kt, `${where}.ground_speed_kt`),
  };
}

function opDoc(op: MirrorOp, where: string): Record<string, Json> {
  if (op.op === "ADD") {
    return { op: "ADD", aircraft: aircraftDoc(op.aircraft, `${where}.aircraft`) };
  }
  if (op.op === "REMOVE") {
    return { op: "REMOVE", callsign: op.callsign };
  }
  return {
    op: "MOVE",
    callsign: op.callsign,
    x_nm: finite(op.x_nm, `${where}.x_nm`),
    y_nm: finite(op.y_nm, `${where}.y_nm`),
    alt_ft: finite(op.alt_ft, `${where}.alt_ft`),
    heading_deg: finite(op.heading_deg, `${where}.heading_deg`),
    ground_speed_kt: finite(op.ground_speed_kt, `${where}.ground_speed_kt`),
  };
}

function stationDoc(s: StationId | null): Json {
  return s === null ? null : { block_id: s.block_id, kind: s.kind, index: s.index };
}

function alertDoc(a: Alert): Record<string, Json> {
  return { kind: a.kind, callsigns: [...a.callsigns], detail: a.detail };
}

function seatDoc(s: SeatInfo): Record<string, Json> {
  return { kind: s.kind, index: s.index, client_id: s.client_id, role: s.role };
}

function payloadDoc(p: Payload): Record<string, Json> {
  const w = `payload(${p.tag})`;
  switch (p.tag) {
    case "HELLO":
      return {
        tag: p.tag,
        client_name: p.client_name,
        desired_role: p.desired_role,
        block_id: p.block_id,
        station_kind: p.station_kind,
        station_index: integer(p.station_index, `${w}.station_index`),
        scenario_name: p.scenario_name,
        token: p.token,
        resume_client_id: p.resume_client_id,
      };
    case "WELCOME":
      return {
        tag: p.tag,
        client_id: p.client_id,
        role: p.role,
        session_id: p.session_id,
        block_id: p.block_id,
        station: stationDoc(p.station),
        tick_index: integer(p.tick_index, `${w}.tick_index`),
      };
    case "REJECT":
      return { tag: p.tag, reason: p.reason, detail: p.detail };
    case "STATE_SNAPSHOT":
      return {
        tag: p.tag,
        picture: p.picture.map((a, i) => aircraftDoc(a, `${w}.picture[${i}]`)),
        picture_digest: p.picture_digest,
        phase: p.phase,
        alerts: p.alerts.map(alertDoc),
        seats: p.seats.map(seatDoc),
      };
    case "STATE_DELTA":
      return {
        tag: p.tag,
        base_digest: p.base_digest,
        ops: p.ops.map((op, i) => opDoc(op, `${w}.ops[${i}]`)),
        result_digest: p.result_digest,
        phase: p.phase,
        alerts: p.alerts.map(alertDoc),
      };
    case "PILOT_CMD":
      return { tag: p.tag, text: p.text };
    case "MIRROR_FRAME":
      if ((p.ops === null) === (p.full_snapshot === null)) {
        throw new TypeError(`${w}: exactly one of ops / full_snapshot must be present`);
      }
      return {
        tag: p.tag,
        target_station: stationDoc(p.target_station),
        base_digest: p.base_digest,
        ops: p.ops === null ? null : p.ops.map((op, i) => opDoc(op, `${w}.ops[${i}]`)),
        full_snapshot:
          p.full_snapshot === null
            ? null
            : p.full_snapshot.map((a, i) => aircraftDoc(a, `${w}.full_snapshot[${i}]`)),
        result_digest: p.result_digest,
      };
    case "POINTER":
      return {
        tag: p.tag,
        tutor_id: p.tutor_id,
        target_station: stationDoc(p.target_station),
        x_nm: finite(p.x_nm, `${w}.x_nm`),
        y_nm: finite(p.y_nm, `${w}.y_nm`),
        visible: p.visible,
        shape: p.shape,
        color: p.color,
      };
    case "CONTROL_GRANT":
      return {
        tag: p.tag,
        tutor_id: p.tutor_id,
        target_station: stationDoc(p.target_station),
        granted_at_tick: integer(p.granted_at_tick, `${w}.granted_at_tick`),
        active: p.active,
      };
    case "CONTROL_REVOKE":
      return { tag: p.tag, tutor_id: p.tutor_id, target_station: stationDoc(p.target_station) };
    case "CONTROL_INPUT":
      return { tag: p.tag, target_station: stationDoc(p.target_station), text: p.text };
    case "TRANSMISSION":
      return { tag: p.tag, frequency_label: p.frequency_label, text: p.text };
    case "SUPERVISOR_CMD":
      return { tag: p.tag, verb: p.verb, args: { ...p.args } };
    case "HEARTBEAT":
      return { tag: p.tag, resync: p.resync, picture_digest: p.picture_digest };
    case "BYE":
      return { tag: p.tag, reason: p.reason };
  }
}

export function messageToDoc(m: Message): Record<string, Json> {
  return {
    protocol_version: integer(m.protocol_version, "protocol_version"),
    seq: integer(m.seq, "seq"),
    sent_at_tick: integer(m.sent_at_tick, "sent_at_tick"),
    session_id: m.session_id,
    sender: m.sender,
    payload: payloadDoc(m.payload),
  };
}

/** JSON with object keys sorted, no whitespace: one canonical text per value. */
export function stableStringify(value: Json): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return `[${value.map(stableStringify).join(",")}]`;
  }
  const entries = Object.keys(value as Record<string, Json>)
    .sort()
    .map(
      (k) => `${JSON.stringify(k)}:${stableStringify((value as Record<string, Json>)[k])}`,
    );
  return `{${entries.join(",")}}`;
}

export function encodeMessage(m: Message): string {
  return stableStringify(messageToDoc(m));
}
