/** Minimal drawing surface, so scope rendering is testable off-screen.
 * `CanvasDraw` backs it with a 2D canvas context; `RecordingDraw` records
 * the calls for assertions. */

export interface Draw {
  clear(width: number, height: number): void;
  circle(x: number, y: number, r: number, color: string, fill: boolean): void;
  line(x1: number, y1: number, x2: number, y2: number, color: string): void;
  text(x: number, y: number, text: string, color: string, sizePx: number): void;
}

export class CanvasDraw implements Draw {
  private ctx: CanvasRenderingContext2D;

  constructor(ctx: CanvasRenderingContext2D) {
    this.ctx = ctx;
  }

  clear(width: number, height: number): void {
    this.ctx.fillStyle = "#06131f";
    this.ctx.fillRect(0, 0, width, height);
  }

  circle(x: number, y: number, r: number, color: string, fill: boolean): void {
    this.ctx.beginPath();
    this.ctx.arc(x, y, r, 0, 2 * Math.PI);
    if (fill) {
      this.ctx.fillStyle = color;
      this.ctx.fill();
    } else {
      this.ctx.strokeStyle = color;
      this.ctx.lineWidth = 1.5;
      this.ctx.stroke();
    }
  }

  line(x1: number, y1: number, x2: number, y2: number, color: string): void {
    this.ctx.beginPath();
    this.ctx.moveTo(x1, y1);
    this.ctx.lineTo(x2, y2);
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = 1;
    this.ctx.stroke();
  }

  text(x: number, y: number, text: string, color: string, sizePx: number): void {
    this.ctx.fillStyle = color;
    this.ctx.font = `${sizePx}px "DejaVu Sans Mono", monospace`;
    this.ctx.fillText(text, x, y);
  }
}

export type DrawOp =
  | { kind: "clear"; width: number; height: number }
  | { kind: "circle"; x: number; y: number; r: number; color: string; fill: boolean }
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number; color: string }
  | { kind: "text"; x: number; y: number; text: string; color: string; sizePx: number };

export class RecordingDraw implements Draw {
  readonly ops: DrawOp[] = [];

  clear(width: number, height: number): void {
    this.ops.length = 0; // A frame starts fresh, like a real repaint.
    this.ops.push({ kind: "clear", width, height });
  }

  circle(x: number, y: number, r: number, color: string, fill: boolean): void {
    this.ops.push({ kind: "circle", x, y, r, color, fill });
  }

  line(x1: number, y1: number, x2: number, y2: number, color: string): void {
    this.ops.push({ kind: "line", x1, y1, x2, y2, color });
  }

  text(x: number, y: number, text: string, color: string, sizePx: number): void {
    this.ops.push({ kind: "text", x, y, text, color, sizePx });
  }

  texts(): string[] {
    return this.ops.filter((op) => op.kind === "text").map((op) => (op as any).text);
  }

  circles(color?: string): DrawOp[] {
    return this.ops.filter((op) => op.kind === "circle" && (!color || op.color === color));
  }
}
