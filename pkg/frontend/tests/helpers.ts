/** Shared test scaffolding: a manual clock, host-frame builders, and an
 * async poll helper. */

import { encodeMessage } from "../src/protocol/codec";
import { pictureDigest } from "../src/protocol/digest";
import {
  Message,
  MirrorOp,
  Payload,
  PictureAircraft,
  StationId,
  makeMessage,
} from "../src/protocol/messages";
import { Clock } from "../src/net/station";

interface Timer {
  id: number;
  at: number;
  intervalMs: number | null;
  fn: () => void;
}

/** Deterministic clock: timers fire only inside advance(). */
export class FakeClock implements Clock {
  nowMs = 0;
  private timers: Timer[] = [];
  private nextId = 1;

  setInterval(fn: () => void, ms: number): unknown {
    const id = this.nextId++;
    this.timers.push({ id, at: this.nowMs + ms, intervalMs: ms, fn });
    return id;
  }

  clearInterval(handle: unknown): void {
    this.timers = this.timers.filter((t) => t.id !== handle);
  }

  setTimeout(fn: () => void, ms: number): unknown {
    const id = this.nextId++;
    this.timers.push({ id, at: this.nowMs + ms, intervalMs: null, fn });
    return id;
  }

  clearTimeout(handle: unknown): void {
    this.clearInterval(handle);
  }

  now = (): number => this.nowMs;

  advance(ms: number): void {
    const deadline = this.nowMs + ms;
    for (;;) {
      const due = this.timers.filter((t) => t.at <= deadline).sort((a, b) => a.at - b.at)[0];
      if (!due) break;
      this.nowMs = Math.max(this.nowMs, due.at);
      if (due.intervalMs === null) {
        this.timers = this.timers.filter((t) => t.id !== due.id);
      } else {
        due.at += due.intervalMs;
      }
      due.fn();
    }
    this.nowMs = deadline;
  }
}

let hostSeq = 0;

export function hostFrame(payload: Payload, sessionId = "B1-s1"): string {
  hostSeq += 1;
  return encodeMessage(makeMessage("host", hostSeq, payload, sessionId));
}

export function hostMessage(payload: Payload, sessionId = "B1-s1"): Message {
  hostSeq += 1;
  return makeMessage("host", hostSeq, payload, sessionId);
}

export const CTL_STATION: StationId = { block_id: "B1", kind: "CONTROLLER_STN", index: 4 };

export function plane(
  callsign: string,
  x: number,
  y: number,
  alt = 11000,
  heading = 90,
  speed = 300,
): PictureAircraft {
  return {
    callsign,
    x_nm: x,
    y_nm: y,
    alt_ft: alt,
    heading_deg: heading,
    ground_speed_kt: speed,
  };
}

export function moveOp(a: PictureAircraft): MirrorOp {
  return { op: "MOVE", ...a };
}

export function welcomeFrame(
  clientId: string,
  role: "CONTROLLER" | "REMOTE_TUTOR" | "PSEUDO_PILOT" | "SUPERVISOR",
  station: StationId | null,
): string {
  return hostFrame({
    tag: "WELCOME",
    client_id: clientId,
    role,
    session_id: "B1-s1",
    block_id: "B1",
    station,
    tick_index: 0,
  });
}

export function snapshotFrame(picture: PictureAircraft[], phase = "RUNNING"): string {
  return hostFrame({
    tag: "STATE_SNAPSHOT",
    picture,
    picture_digest: pictureDigest(picture),
    phase,
    alerts: [],
    seats: [],
  });
}

export function mirrorSnapshotFrame(station: StationId, picture: PictureAircraft[]): string {
  return hostFrame({
    tag: "MIRROR_FRAME",
    target_station: station,
    base_digest: "",
    ops: null,
    full_snapshot: picture,
    result_digest: pictureDigest(picture),
  });
}

export async function waitFor(
  check: () => boolean,
  what: string,
  timeoutMs = 15000,
  intervalMs = 25,
): Promise<void> {
  const start = Date.now();
  for (;;) {
    if (check()) return;
    if (Date.now() - start > timeoutMs) {
      throw new Error(`timeout waiting for ${what}`);
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
