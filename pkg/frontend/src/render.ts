// Canvas renderer: hazard cells, vehicle pose, plan polyline, HUD.
// Pure function of the latest complete snapshot; no client-side prediction.

import { HazardGridDoc } from "./protocol.js";
import { ViewSnapshot } from "./store.js";

export interface Canvas2D {
  // the subset of CanvasRenderingContext2D the renderer touches, so tests
  // can substitute a recording stub
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

export interface RenderGeometry {
  width: number;
  height: number;
  scale: number;    // pixels per meter
  originX: number;  // world origin in pixels
  originY: number;
}

export const HUD_HEIGHT = 96;

export function geometryFor(map: HazardGridDoc | null, width = 720): RenderGeometry {
  const cols = map ? map.cols : 24;
  const rows = map ? map.rows : 14;
  const res = map ? map.resolution : 0.5;
  const scale = width / (cols * res);
  return { width, height: rows * res * scale + HUD_HEIGHT, scale, originX: 0, originY: rows * res * scale };
}

export function worldToScreen(geom: RenderGeometry, x: number, y: number): [number, number] {
  return [geom.originX + x * geom.scale, geom.originY - y * geom.scale];
}

export function render(ctx: Canvas2D, geom: RenderGeometry,
                       view: ViewSnapshot, map: HazardGridDoc | null): void {
  ctx.clearRect(0, 0, geom.width, geom.height);
  ctx.fillStyle = "#f4f4f0";
  ctx.fillRect(0, 0, geom.width, geom.height - HUD_HEIGHT);

  if (map) {
    ctx.fillStyle = "#4a4a52";
    const cell = map.resolution * geom.scale;
    for (let i = 0; i < map.rows; i++) {
      for (let j = 0; j < map.cols; j++) {
        if (map.data[i * map.cols + j]) {
          const [sx, sy] = worldToScreen(
            geom, map.origin[0] + j * map.resolution,
            map.origin[1] + (i + 1) * map.resolution);
          ctx.fillRect(sx, sy, cell + 0.5, cell + 0.5);
        }
      }
    }
  }

  if (!view.state) {
    ctx.fillStyle = "#333";
    ctx.font = "20px sans-serif";
    ctx.fillText("connecting…", geom.width / 2 - 60, (geom.height - HUD_HEIGHT) / 2);
    return;
  }

  if (view.plan && view.plan.points.length > 1) {
    ctx.strokeStyle = "#2a7de1";
    ctx.lineWidth = 2;
    ctx.beginPath();
    const [px0, py0] = worldToScreen(geom, view.plan.points[0][0], view.plan.points[0][1]);
    ctx.moveTo(px0, py0);
    for (const [wx, wy] of view.plan.points.slice(1)) {
      const [sx, sy] = worldToScreen(geom, wx, wy);
      ctx.lineTo(sx, sy);
    }
    ctx.stroke();
  }

  drawVehicle(ctx, geom, view.state.x, view.state.y, view.state.theta,
              view.state.degradation.some((a) => a !== 0));
  drawHud(ctx, geom, view);
}

function drawVehicle(ctx: Canvas2D, geom: RenderGeometry,
                     x: number, y: number, theta: number, degraded: boolean): void {
  const [sx, sy] = worldToScreen(geom, x, y);
  const size = 0.3 * geom.scale;
  ctx.save();
  ctx.translate(sx, sy);
  ctx.rotate(-theta); // canvas y is flipped, so headings rotate clockwise
  ctx.fillStyle = degraded ? "#d9822b" : "#1e9e46";
  ctx.beginPath();
  ctx.moveTo(size, 0);
  ctx.lineTo(-0.6 * size, 0.55 * size);
  ctx.lineTo(-0.6 * size, -0.55 * size);
  ctx.closePath();
  ctx.fill();
  ctx.restore();
}

function drawHud(ctx: Canvas2D, geom: RenderGeometry, view: ViewSnapshot): void {
  const top = geom.height - HUD_HEIGHT;
  ctx.fillStyle = "#20242c";
  ctx.fillRect(0, top, geom.width, HUD_HEIGHT);
  ctx.fillStyle = "#e8e8e8";
  ctx.font = "13px monospace";
  const s = view.state!;
  ctx.fillText(`cmd v=${view.command.v_d.toFixed(2)} w=${view.command.omega_d.toFixed(2)}`, 12, top + 20);
  ctx.fillText(`act v=${s.v.toFixed(2)} w=${s.omega.toFixed(2)}`, 12, top + 38);
  ctx.fillText(`safety=${s.safety_count} tick=${s.tick}`, 12, top + 56);
  if (view.lastEvent) {
    ctx.fillText(`event: ${view.lastEvent}`, 12, top + 74);
  }
  if (view.plan) {
    ctx.fillText(`plan value=${view.plan.value.toFixed(2)}`, 230, top + 20);
    const bars = view.plan.confidence;
    const barWidth = 14;
    for (let d = 0; d < bars.length; d++) {
      const h = Math.max(2, bars[d] * 40);
      ctx.fillStyle = "#2a7de1";
      ctx.fillRect(230 + d * (barWidth + 4), top + 70 - h, barWidth, h);
    }
    ctx.fillStyle = "#e8e8e8";
    ctx.fillText("confidence by depth", 230, top + 88);
  }
}
