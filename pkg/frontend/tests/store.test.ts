import { describe, expect, it } from "vitest";

import { RadarPicture, TRAIL_LENGTH } from "../src/state/picture";
import { RecordingDraw } from "../src/views/draw";
import { POINTER_COLOR, POINTER_RADIUS_PX, Scope } from "../src/views/scope";
import { plane } from "./helpers";

describe("radar picture model", () => {
  it("keeps at most the last five trail positions", () => {
    const model = new RadarPicture();
    for (let i = 0; i < 9; i++) {
      model.applyPicture([plane("BAW123", i, i * 2)]);
    }
    const trail = model.trails.get("BAW123")!;
    expect(trail).toHaveLength(TRAIL_LENGTH);
    expect(trail[0]).toEqual({ x_nm: 4, y_nm: 8 });
    expect(trail[TRAIL_LENGTH - 1]).toEqual({ x_nm: 8, y_nm: 16 });
  });

  it("skips duplicate positions so a pause does not erase history", () => {
    const model = new RadarPicture();
    model.applyPicture([plane("BAW123", 1, 1)]);
    model.applyPicture([plane("BAW123", 2, 2)]);
    model.applyPicture([plane("BAW123", 2, 2)]);
    expect(model.trails.get("BAW123")).toHaveLength(2);
  });

  it("drops aircraft and trails that left the picture", () => {
    const model = new RadarPicture();
    model.applyPicture([plane("BAW123", 0, 0), plane("DLH456", 5, 5)]);
    model.applyPicture([plane("DLH456", 6, 5)]);
    expect(model.aircraft.has("BAW123")).toBe(false);
    expect(model.trails.has("BAW123")).toBe(false);
    expect(model.aircraft.size).toBe(1);
  });

  it("collects alerted callsigns and clears hidden pointers", () => {
    const model = new RadarPicture();
    model.alerts = [
      { kind: "SEPARATION", callsigns: ["BAW123", "DLH456"], detail: "" },
      { kind: "EMERGENCY", callsigns: ["AF1"], detail: "" },
    ];
    expect([...model.alertedCallsigns()].sort()).toEqual(["AF1", "BAW123", "DLH456"]);
    const pointer = {
      tag: "POINTER" as const,
      tutor_id: "t1",
      target_station: { block_id: "B1", kind: "CONTROLLER_STN" as const, index: 1 },
      x_nm: 1,
      y_nm: 2,
      visible: true,
      shape: "CIRCLE" as const,
      color: "RED" as const,
    };
    model.setPointer(pointer);
    expect(model.pointer).not.toBeNull();
    model.setPointer({ ...pointer, visible: false });
    expect(model.pointer).toBeNull();
  });
});

describe("scope projection", () => {
  it("is north-up: +y NM is up the screen", () => {
    const scope = new Scope(800, 600);
    const [x0, y0] = scope.project(0, 0);
    expect([x0, y0]).toEqual([400, 300]);
    const [, yNorth] = scope.project(0, 10);
    expect(yNorth).toBeLessThan(y0);
    const [xEast] = scope.project(10, 0);
    expect(xEast).toBeGreaterThan(x0);
  });

  it("unproject inverts project after zoom and pan", () => {
    const scope = new Scope(800, 600);
    scope.zoom(1.7, 100, 100);
    scope.pan(35, -20);
    const [px, py] = scope.project(12.5, -3.25);
    const [x, y] = scope.unproject(px, py);
    expect(x).toBeCloseTo(12.5, 9);
    expect(y).toBeCloseTo(-3.25, 9);
  });

  it("zoom keeps the anchor point fixed on screen", () => {
    const scope = new Scope(800, 600);
    const [beforeX, beforeY] = scope.unproject(200, 150);
    scope.zoom(2, 200, 150);
    const [afterX, afterY] = scope.unproject(200, 150);
    expect(afterX).toBeCloseTo(beforeX, 9);
    expect(afterY).toBeCloseTo(beforeY, 9);
  });

  it("hit-tests the nearest aircraft within the threshold", () => {
    const scope = new Scope(800, 600);
    const model = new RadarPicture();
    model.applyPicture([plane("BAW123", 0, 0), plane("DLH456", 2, 0)]);
    const [px, py] = scope.project(0, 0);
    expect(scope.hitTest(model, px + 3, py)).toBe("BAW123");
    const [qx, qy] = scope.project(2, 0);
    expect(scope.hitTest(model, qx - 2, qy)).toBe("DLH456");
    expect(scope.hitTest(model, px + 300, py + 300)).toBeNull();
  });
});

describe("scope rendering", () => {
  it("draws an empty scope as range rings only", () => {
    const scope = new Scope(400, 400);
    const draw = new RecordingDraw();
    scope.render(new RadarPicture(), draw, true);
    expect(draw.texts()).toEqual([]);
    expect(draw.circles().length).toBeGreaterThan(0); // The rings.
  });

  it("labels every aircraft with callsign, level, and speed", () => {
    const scope = new Scope(400, 400);
    const model = new RadarPicture();
    model.applyPicture([plane("BAW123", 0, 0, 11000, 90, 310)]);
    const draw = new RecordingDraw();
    scope.render(model, draw, true);
    expect(draw.texts()).toContain("BAW123");
    expect(draw.texts()).toContain("110 310kt");
  });

  it("draws trail dots behind the blip", () => {
    const scope = new Scope(400, 400);
    const model = new RadarPicture();
    model.applyPicture([plane("BAW123", 0, 0)]);
    model.applyPicture([plane("BAW123", 1, 0)]);
    model.applyPicture([plane("BAW123", 2, 0)]);
    const draw = new RecordingDraw();
    scope.render(model, draw, true);
    const dots = draw.ops.filter((op) => op.kind === "circle" && op.fill);
    expect(dots).toHaveLength(2); // History only, not the current position.
  });

  it("flashes alerted aircraft with the blink phase", () => {
    const scope = new Scope(400, 400);
    const model = new RadarPicture();
    model.applyPicture([plane("BAW123", 0, 0), plane("DLH456", 3, 0)]);
    model.alerts = [{ kind: "SEPARATION", callsigns: ["BAW123", "DLH456"], detail: "" }];
    const on = new RecordingDraw();
    scope.render(model, on, true);
    const flashed = on.ops.filter((op) => op.kind === "text" && op.color === "#ffcc00");
    expect(flashed.length).toBeGreaterThan(0);
    const off = new RecordingDraw();
    scope.render(model, off, false);
    expect(off.ops.filter((op) => op.kind === "text" && op.color === "#ffcc00")).toHaveLength(0);
  });

  it("draws the visible pointer as a red circle with the tutor id", () => {
    const scope = new Scope(400, 400);
    const model = new RadarPicture();
    model.setPointer({
      tag: "POINTER",
      tutor_id: "tutor-9",
      target_station: { block_id: "B1", kind: "CONTROLLER_STN", index: 1 },
      x_nm: 5,
      y_nm: 5,
      visible: true,
      shape: "CIRCLE",
      color: "RED",
    });
    const draw = new RecordingDraw();
    scope.render(model, draw, true);
    const circles = draw.circles(POINTER_COLOR);
    expect(circles).toHaveLength(1);
    const circle = circles[0]!;
    if (circle.kind !== "circle") throw new Error("unreachable");
    expect(circle.r).toBe(POINTER_RADIUS_PX);
    const [px, py] = scope.project(5, 5);
    expect(circle.x).toBeCloseTo(px, 6);
    expect(circle.y).toBeCloseTo(py, 6);
    expect(draw.texts()).toContain("tutor-9");
  });
});
