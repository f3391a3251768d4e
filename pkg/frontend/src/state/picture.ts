/** Client-side radar picture: aircraft keyed by callsign, trail history,
 * pointer overlay state, and the live alert list. */

import { Alert, PictureAircraft, Pointer } from "../protocol/messages";

export const TRAIL_LENGTH = 5;

export interface TrailPoint {
  readonly x_nm: number;
  readonly y_nm: number;
}

export class RadarPicture {
  readonly aircraft = new Map<string, PictureAircraft>();
  /** Oldest first; includes the current position; capped at TRAIL_LENGTH. */
  readonly trails = new Map<string, TrailPoint[]>();
  alerts: readonly Alert[] = [];
  pointer: Pointer | null = null;
  phase = "";

  applyPicture(picture: readonly PictureAircraft[]): void {
    const seen = new Set<string>();
    for (const a of picture) {
      seen.add(a.callsign);
      this.aircraft.set(a.callsign, a);
      const trail = this.trails.get(a.callsign) ?? [];
      const last = trail[trail.length - 1];
      if (!last || last.x_nm !== a.x_nm || last.y_nm !== a.y_nm) {
        trail.push({ x_nm: a.x_nm, y_nm: a.y_nm });
        if (trail.length > TRAIL_LENGTH) {
          trail.splice(0, trail.length - TRAIL_LENGTH);
        }
      }
      this.trails.set(a.callsign, trail);
    }
    for (const callsign of [...this.aircraft.keys()]) {
      if (!seen.has(callsign)) {
        this.aircraft.delete(callsign);
        this.trails.delete(callsign);
      }
    }
  }

  setPointer(p: Pointer): void {
    this.pointer = p.visible ? p : null;
  }

  /** Callsigns named by any active alert; the scope flashes these. */
  alertedCallsigns(): Set<string> {
    const out = new Set<string>();
    for (const alert of this.alerts) {
      for (const callsign of alert.callsigns) {
        out.add(callsign);
      }
    }
    return out;
  }
}
