/** Radar scope: fixed north-up orthographic projection from NM coordinates
 * onto the canvas, with zoom and pan. Draws range rings, aircraft blips
 * with labels and trails, alert flashes, and the tutor pointer overlay. */

import { PictureAircraft } from "../protocol/messages";
import { RadarPicture } from "../state/picture";
import { Draw } from "./draw";

export const POINTER_RADIUS_PX = 14;
export const POINTER_COLOR = "#ff3b30";
const BLIP_COLOR = "#7fffd4";
const ALERT_COLOR = "#ffcc00";
const TRAIL_COLOR = "#2e6f5e";
const RING_COLOR = "#123247";
const LABEL_SIZE = 12;
const RING_SPACING_NM = 10;

export class Scope {
  width: number;
  height: number;
  centerXNm = 0;
  centerYNm = 0;
  pxPerNm = 8;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  /** North-up: +y in NM points to the top of the screen. */
  project(xNm: number, yNm: number): [number, number] {
    return [
      this.width / 2 + (xNm - this.centerXNm) * this.pxPerNm,
      this.height / 2 - (yNm - this.centerYNm) * this.pxPerNm,
    ];
  }

  unproject(xPx: number, yPx: number): [number, number] {
    return [
      this.centerXNm + (xPx - this.width / 2) / this.pxPerNm,
      this.centerYNm - (yPx - this.height / 2) / this.pxPerNm,
    ];
  }

  zoom(factor: number, anchorXPx: number, anchorYPx: number): void {
    const [ax, ay] = this.unproject(anchorXPx, anchorYPx);
    this.pxPerNm = Math.min(200, Math.max(0.5, this.pxPerNm * factor));
    // Keep the anchor point under the cursor.
    const [nx, ny] = this.unproject(anchorXPx, anchorYPx);
    this.centerXNm += ax - nx;
    this.centerYNm += ay - ny;
  }

  pan(dxPx: number, dyPx: number): void {
    this.centerXNm -= dxPx / this.pxPerNm;
    this.centerYNm += dyPx / this.pxPerNm;
  }

  /** Nearest aircraft within `thresholdPx` of a screen point, else null. */
  hitTest(model: RadarPicture, xPx: number, yPx: number, thresholdPx = 18): string | null {
    let best: string | null = null;
    let bestDist = thresholdPx;
    for (const a of model.aircraft.values()) {
      const [px, py] = this.project(a.x_nm, a.y_nm);
      const dist = Math.hypot(px - xPx, py - yPx);
      if (dist <= bestDist) {
        bestDist = dist;
        best = a.callsign;
      }
    }
    return best;
  }

  render(model: RadarPicture, draw: Draw, blinkOn: boolean): void {
    draw.clear(this.width, this.height);
    this.renderRings(draw);
    const flashing = model.alertedCallsigns();
    for (const a of model.aircraft.values()) {
      this.renderAircraft(model, draw, a, flashing.has(a.callsign) && blinkOn);
    }
    this.renderPointer(model, draw);
  }

  private renderRings(draw: Draw): void {
    const [cx, cy] = this.project(0, 0);
    const maxR = Math.hypot(this.width, this.height);
    for (let nm = RING_SPACING_NM; nm * this.pxPerNm <= maxR; nm += RING_SPACING_NM) {
      draw.circle(cx, cy, nm * this.pxPerNm, RING_COLOR, false);
    }
    draw.line(cx - 6, cy, cx + 6, cy, RING_COLOR);
    draw.line(cx, cy - 6, cx, cy + 6, RING_COLOR);
  }

  private renderAircraft(
    model: RadarPicture,
    draw: Draw,
    a: PictureAircraft,
    flash: boolean,
  ): void {
    const color = flash ? ALERT_COLOR : BLIP_COLOR;
    const trail = model.trails.get(a.callsign) ?? [];
    for (const point of trail.slice(0, -1)) {
      const [tx, ty] = this.project(point.x_nm, point.y_nm);
      draw.circle(tx, ty, 1.5, TRAIL_COLOR, true);
    }
    const [px, py] = this.project(a.x_nm, a.y_nm);
    draw.circle(px, py, 4, color, false);
    // Velocity leader: one minute of flight along the heading.
    const leaderNm = a.ground_speed_kt / 60;
    const rad = ((90 - a.heading_deg) * Math.PI) / 180;
    const [lx, ly] = this.project(a.x_nm + leaderNm * Math.cos(rad), a.y_nm + leaderNm * Math.sin(rad));
    draw.line(px, py, lx, ly, color);
    draw.text(px + 8, py - 8, a.callsign, color, LABEL_SIZE);
    const level = Math.round(a.alt_ft / 100);
    const speed = Math.round(a.ground_speed_kt);
    draw.text(px + 8, py + 6, `${level} ${speed}kt`, color, LABEL_SIZE - 2);
  }

  private renderPointer(model: RadarPicture, draw: Draw): void {
    const p = model.pointer;
    if (!p) return;
    const [px, py] = this.project(p.x_nm, p.y_nm);
    draw.circle(px, py, POINTER_RADIUS_PX, POINTER_COLOR, false);
    draw.text(px + POINTER_RADIUS_PX + 4, py, p.tutor_id, POINTER_COLOR, LABEL_SIZE);
  }
}
