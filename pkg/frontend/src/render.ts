// Top-down view rendering plus the sagittal leg strip chart. The
// geometry helpers are pure so the view math is testable headlessly.

import { Ring } from "./ring.js";
import { TelemetryFrame } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  cmPerPx: number;
  centerX: number; // world cm at canvas center
  centerY: number;
}

export function worldToCanvas(
  v: Viewport,
  xCm: number,
  yCm: number,
): { px: number; py: number } {
  // +x world to the right, +y world up; canvas y grows downward.
  return {
    px: v.width / 2 + (xCm - v.centerX) / v.cmPerPx,
    py: v.height / 2 - (yCm - v.centerY) / v.cmPerPx,
  };
}

/** Follow the robot once it nears the edge of the viewport. */
export function followTarget(v: Viewport, xCm: number, yCm: number): Viewport {
  const marginPx = 60;
  const half = (axis: number) => (axis / 2 - marginPx) * v.cmPerPx;
  const out = { ...v };
  if (Math.abs(xCm - v.centerX) > half(v.width)) out.centerX = xCm;
  if (Math.abs(yCm - v.centerY) > half(v.height)) out.centerY = yCm;
  return out;
}

export function budgetColor(budget: number, mode: string): string {
  if (mode === "cooldown") return "#d64545";
  if (budget < 0.3) return "#e0a030";
  return "#3fa34d";
}

export interface Canvas2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(a: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
}

export function drawScene(
  ctx: Canvas2D,
  view: Viewport,
  trail: Ring<{ x: number; y: number }>,
  frame: TelemetryFrame | null,
): void {
  ctx.clearRect(0, 0, view.width, view.height);

  // metric grid every 10 cm
  ctx.strokeStyle = "#233043";
  ctx.lineWidth = 1;
  ctx.globalAlpha = 0.6;
  const stepPx = 10 / view.cmPerPx;
  const x0 = (view.width / 2 - ((view.centerX % 10) + 10) % 10 / view.cmPerPx) % stepPx;
  for (let x = x0; x <= view.width; x += stepPx) {
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, view.height);
    ctx.stroke();
  }
  const y0 = (view.height / 2 - ((view.centerY % 10) + 10) % 10 / view.cmPerPx) % stepPx;
  for (let y = y0; y <= view.height; y += stepPx) {
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(view.width, y);
    ctx.stroke();
  }
  ctx.globalAlpha = 1.0;

  // fading trail
  const pts = trail.items();
  ctx.strokeStyle = "#5fb8ff";
  ctx.lineWidth = 2;
  for (let i = 1; i < pts.length; i++) {
    ctx.globalAlpha = 0.15 + 0.85 * (i / pts.length);
    const a = worldToCanvas(view, pts[i - 1].x, pts[i - 1].y);
    const b = worldToCanvas(view, pts[i].x, pts[i].y);
    ctx.beginPath();
    ctx.moveTo(a.px, a.py);
    ctx.lineTo(b.px, b.py);
    ctx.stroke();
  }
  ctx.globalAlpha = 1.0;

  // robot marker, heading-oriented triangle
  if (frame) {
    const { px, py } = worldToCanvas(view, frame.x_cm, frame.y_cm);
    ctx.save();
    ctx.translate(px, py);
    ctx.rotate(-frame.heading_rad);
    ctx.fillStyle = frame.mode === "cooldown" ? "#d64545" : "#e8f1ff";
    ctx.beginPath();
    ctx.moveTo(14, 0);
    ctx.lineTo(-9, 7);
    ctx.lineTo(-9, -7);
    ctx.closePath();
    ctx.fill();
    ctx.restore();
  }
}

export function drawLegStrip(
  ctx: Canvas2D,
  width: number,
  height: number,
  history: Ring<{ t: number; front: number; back: number }>,
): void {
  ctx.clearRect(0, 0, width, height);
  const pts = hist(history);
  if (pts.length < 2) return;
  const t0 = pts[0].t;
  const t1 = pts[pts.length - 1].t;
  const xs = pts.map((p) => p.front).concat(pts.map((p) => p.back));
  const lo = Math.min(...xs);
  const hi = Math.max(...xs);
  const span = Math.max(hi - lo, 1e-6);
  const toPx = (t: number, v: number) => ({
    px: ((t - t0) / Math.max(t1 - t0, 1e-9)) * width,
    py: height - ((v - lo) / span) * (height - 8) - 4,
  });
  for (const [key, color] of [["front", "#ffd166"], ["back", "#9be09b"]] as const) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    pts.forEach((p, i) => {
      const { px, py } = toPx(p.t, p[key]);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
}

function hist(
  history: Ring<{ t: number; front: number; back: number }>,
): { t: number; front: number; back: number }[] {
  return history.items();
}
