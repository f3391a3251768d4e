/** Remote-tutor station: live mirror of the attached controller scope,
 * pointer overlay control, remote-control toggle, and chat.
 *
 * Pointer traffic is rate-limited to POINTER_MAX_HZ with a trailing
 * update, so the last position (and any visibility change) always gets
 * through. While a control grant is active, clicking an aircraft selects
 * it and clicking open scope vectors the selection toward that point.
 */

import { Clock, Station } from "../net/station";
import { POINTER_MAX_HZ, StationId } from "../protocol/messages";
import { RadarPicture } from "../state/picture";
import { Draw } from "./draw";
import { Scope } from "./scope";

const REAL_CLOCK: Clock = {
  setInterval: (fn, ms) => setInterval(fn, ms),
  clearInterval: (h) => clearInterval(h as Parameters<typeof clearInterval>[0]),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]),
};

/** At most `maxHz` calls per second, trailing call guaranteed. */
export class RateLimiter {
  private intervalMs: number;
  private clock: Clock;
  private now: () => number;
  private lastEmit = Number.NEGATIVE_INFINITY;
  private pending: (() => void) | null = null;
  private handle: unknown = null;

  constructor(maxHz: number, clock: Clock = REAL_CLOCK, now: () => number = Date.now) {
    this.intervalMs = 1000 / maxHz;
    this.clock = clock;
    this.now = now;
  }

  run(fn: () => void): void {
    const t = this.now();
    if (t - this.lastEmit >= this.intervalMs) {
      this.lastEmit = t;
      fn();
      return;
    }
    this.pending = fn;
    if (this.handle === null) {
      const waitMs = this.lastEmit + this.intervalMs - t;
      this.handle = this.clock.setTimeout(() => this.flush(), waitMs);
    }
  }

  private flush(): void {
    this.handle = null;
    const fn = this.pending;
    this.pending = null;
    if (fn) {
      this.lastEmit = this.now();
      fn();
    }
  }

  stop(): void {
    if (this.handle !== null) {
      this.clock.clearTimeout(this.handle);
      this.handle = null;
    }
    this.pending = null;
  }
}

/** Clockwise bearing from north, in whole degrees 0..359. */
export function bearingDeg(fromX: number, fromY: number, toX: number, toY: number): number {
  const deg = (Math.atan2(toX - fromX, toY - fromY) * 180) / Math.PI;
  return Math.round((deg + 360) % 360) % 360;
}

export interface ClickResult {
  readonly selected: string | null;
  readonly commanded: string | null;
}

const LOG_LIMIT = 200;

export class TutorView {
  readonly model = new RadarPicture();
  readonly scope: Scope;
  readonly log: string[] = [];
  attachment: StationId | null = null;
  granted = false;
  selected: string | null = null;
  connectionBanner = "";

  private station: Station;
  private limiter: RateLimiter;

  constructor(station: Station, width = 900, height = 900, clock?: Clock, now?: () => number) {
    this.station = station;
    this.scope = new Scope(width, height);
    this.limiter = new RateLimiter(POINTER_MAX_HZ, clock, now);
    station.onWelcome = (w) => {
      this.attachment = w.station;
    };
    station.onMirror = (_station, picture) => this.model.applyPicture(picture);
    station.onGrant = (g) => {
      if (g.tutor_id === station.clientId) {
        this.granted = true;
        this.push(`control granted at tick ${g.granted_at_tick}`);
      }
    };
    station.onRevoke = (r) => {
      if (r.tutor_id === station.clientId) {
        this.granted = false;
        this.selected = null;
        this.push("control revoked");
      }
    };
    station.onTransmission = (t) => this.push(`[${t.frequency_label}] ${t.text}`);
    station.onReject = (r) => this.push(`${r.reason}${r.detail ? `: ${r.detail}` : ""}`);
    station.onConnection = (state, detail) => {
      this.connectionBanner =
        state === "online" ? "" : `${state}${detail ? `: ${detail}` : ""}`;
    };
  }

  pointerMove(xPx: number, yPx: number): void {
    const target = this.attachment;
    if (!target) return;
    const [xNm, yNm] = this.scope.unproject(xPx, yPx);
    this.limiter.run(() => this.station.sendPointer(target, xNm, yNm, true));
  }

  pointerLeave(): void {
    const target = this.attachment;
    if (!target) return;
    this.limiter.run(() => this.station.sendPointer(target, 0, 0, false));
  }

  /** Request or release remote control; state flips when the host echoes
   * the grant or revoke note back. */
  toggleControl(): void {
    const target = this.attachment;
    if (!target) return;
    this.station.requestControl(target, !this.granted);
  }

  /** Click an aircraft to select it; with control granted, click open scope
   * to vector the selection toward that point. */
  scopeClick(xPx: number, yPx: number): ClickResult {
    const hit = this.scope.hitTest(this.model, xPx, yPx);
    if (hit !== null) {
      this.selected = hit;
      return { selected: hit, commanded: null };
    }
    const target = this.attachment;
    if (!this.granted || !target || this.selected === null) {
      return { selected: this.selected, commanded: null };
    }
    const aircraft = this.model.aircraft.get(this.selected);
    if (!aircraft) {
      return { selected: this.selected, commanded: null };
    }
    const [xNm, yNm] = this.scope.unproject(xPx, yPx);
    const heading = bearingDeg(aircraft.x_nm, aircraft.y_nm, xNm, yNm);
    const text = `${this.selected} FH ${heading}`;
    this.station.sendControlInput(target, text);
    this.push(`sent: ${text}`);
    return { selected: this.selected, commanded: text };
  }

  sendChat(frequencyLabel: string, text: string): void {
    this.station.sendTransmission(frequencyLabel, text);
    this.push(`[${frequencyLabel}] me: ${text}`);
  }

  render(draw: Draw, blinkOn: boolean): void {
    this.scope.render(this.model, draw, blinkOn);
  }

  private push(text: string): void {
    this.log.push(text);
    if (this.log.length > LOG_LIMIT) {
      this.log.splice(0, this.log.length - LOG_LIMIT);
    }
  }
}
