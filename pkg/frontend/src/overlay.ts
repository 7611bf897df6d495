/** Canvas overlay drawing: source polylines, target splines, per-frame
 * dots (presence = visibility), source-to-target arrows, and drag
 * handles. Pure against a minimal 2D-context interface so it can be
 * exercised headlessly. */

import type { Rgb, TrackPayload, Vec2, ViewState } from "./types.js";

export interface Draw2D {
  save(): void;
  restore(): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  stroke(): void;
  fill(): void;
  translate(x: number, y: number): void;
  scale(x: number, y: number): void;
  setLineDash(segments: number[]): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
}

export function colorToCss(c: Rgb): string {
  const ch = (v: number) => Math.round(v * 255);
  return `rgb(${ch(c[0])}, ${ch(c[1])}, ${ch(c[2])})`;
}

const DOT_RADIUS = 4;
const HANDLE_SIZE = 8;
const ARROW_MIN_LENGTH = 1e-6;
const ARROW_HEAD = 6;

function polyline(ctx: Draw2D, points: Vec2[]): void {
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (let i = 1; i < points.length; i++) ctx.lineTo(points[i][0], points[i][1]);
  ctx.stroke();
}

function dot(ctx: Draw2D, p: Vec2, radius: number): void {
  ctx.beginPath();
  ctx.arc(p[0], p[1], radius, 0, 2 * Math.PI);
  ctx.fill();
}

function arrow(ctx: Draw2D, from: Vec2, to: Vec2, zoom: number): void {
  ctx.beginPath();
  ctx.moveTo(from[0], from[1]);
  ctx.lineTo(to[0], to[1]);
  ctx.stroke();
  const angle = Math.atan2(to[1] - from[1], to[0] - from[0]);
  const head = ARROW_HEAD / zoom;
  ctx.beginPath();
  ctx.moveTo(to[0], to[1]);
  ctx.lineTo(to[0] - head * Math.cos(angle - 0.5), to[1] - head * Math.sin(angle - 0.5));
  ctx.moveTo(to[0], to[1]);
  ctx.lineTo(to[0] - head * Math.cos(angle + 0.5), to[1] - head * Math.sin(angle + 0.5));
  ctx.stroke();
}

export function renderOverlay(
  ctx: Draw2D,
  source: TrackPayload[],
  target: TrackPayload[],
  view: ViewState,
): void {
  const { frame, zoom, pan, overlays } = view;
  ctx.save();
  ctx.translate(pan[0], pan[1]);
  ctx.scale(zoom, zoom);
  // Dot/handle/arrow sizes divide by zoom so they stay a fixed screen
  // size regardless of canvas zoom.
  const dotR = DOT_RADIUS / zoom;

  if (overlays.source) {
    for (const track of source) {
      ctx.strokeStyle = colorToCss(track.color);
      ctx.fillStyle = ctx.strokeStyle;
      ctx.lineWidth = 1.5 / zoom;
      ctx.globalAlpha = 0.6;
      ctx.setLineDash([]);
      polyline(ctx, track.xy);
      ctx.globalAlpha = 1.0;
      if (track.visible[frame]) dot(ctx, track.xy[frame], dotR);
    }
  }

  if (overlays.target) {
    for (const track of target) {
      ctx.strokeStyle = colorToCss(track.color);
      ctx.fillStyle = ctx.strokeStyle;
      ctx.lineWidth = 2.5 / zoom;
      ctx.globalAlpha = 0.9;
      ctx.setLineDash([6 / zoom, 4 / zoom]);
      polyline(ctx, track.xy);
      ctx.setLineDash([]);
      ctx.globalAlpha = 1.0;
      if (track.visible[frame]) dot(ctx, track.xy[frame], dotR);
    }
  }

  if (overlays.arrows) {
    ctx.strokeStyle = "rgb(255, 64, 64)";
    ctx.lineWidth = 1.5 / zoom;
    ctx.globalAlpha = 1.0;
    ctx.setLineDash([]);
    for (const src of source) {
      const tgt = target.find((t) => t.id === src.id);
      if (!tgt) continue;
      const a = src.xy[frame];
      const b = tgt.xy[frame];
      const len = Math.hypot(b[0] - a[0], b[1] - a[1]);
      if (len < ARROW_MIN_LENGTH) continue; // anchored: no arrow
      arrow(ctx, a, b, zoom);
    }
  }

  if (view.selected !== null && view.handles) {
    ctx.strokeStyle = "rgb(255, 255, 255)";
    ctx.fillStyle = "rgba(255, 255, 255, 0.85)";
    ctx.lineWidth = 1 / zoom;
    const h = HANDLE_SIZE / zoom;
    ctx.globalAlpha = 0.5;
    polyline(ctx, view.handles);
    ctx.globalAlpha = 1.0;
    for (const p of view.handles) {
      ctx.beginPath();
      ctx.rect(p[0] - h / 2, p[1] - h / 2, h, h);
      ctx.fill();
      ctx.stroke();
    }
  }
  ctx.restore();
}
