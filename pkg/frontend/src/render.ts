// Canvas renderer: polar zone fan mirroring the physical array layout,
// with a central heat disk driven by the aggregate detection count.

import type { ViewState, ZoneVisual } from "./state.js";
import { zoneVisual } from "./state.js";

export const COLORS: Record<ZoneVisual, string> = {
  present: "#2ecc40",
  absent: "#e74c3c",
  stale: "#95a5a6",
};

export const SECTOR_WIDTH_DEG = 28;

/** Canvas arc angles (radians) of one sector; up is -90 degrees on canvas. */
export function sectorAngles(boresightDeg: number): { start: number; end: number } {
  const center = -90 + boresightDeg;
  return {
    start: ((center - SECTOR_WIDTH_DEG / 2) * Math.PI) / 180,
    end: ((center + SECTOR_WIDTH_DEG / 2) * Math.PI) / 180,
  };
}

export function zoneColor(visual: ZoneVisual): string {
  return COLORS[visual];
}

export function render(
  state: ViewState,
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const cx = width / 2;
  const cy = height - 20;
  const rOuter = Math.min(width / 2 - 10, height - 60);
  const rInner = rOuter * 0.22;
  const boresights = state.config?.boresights_deg ?? [-56, -28, 0, 28, 56];

  boresights.forEach((b, i) => {
    const { start, end } = sectorAngles(b);
    ctx.beginPath();
    ctx.arc(cx, cy, rOuter, start, end);
    ctx.arc(cx, cy, rInner, end, start, true);
    ctx.closePath();
    ctx.fillStyle = zoneColor(zoneVisual(state, i + 1));
    ctx.globalAlpha = 0.85;
    ctx.fill();
    ctx.globalAlpha = 1.0;
    ctx.strokeStyle = "#1b2631";
    ctx.lineWidth = 2;
    ctx.stroke();

    const mid = (start + end) / 2;
    const lx = cx + Math.cos(mid) * (rOuter + rInner) * 0.55;
    const ly = cy + Math.sin(mid) * (rOuter + rInner) * 0.55;
    ctx.fillStyle = "#ffffff";
    ctx.font = "16px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(String(i + 1), lx, ly);
  });

  // heat disk: beam-convergence area, intensity from the detection count
  ctx.beginPath();
  ctx.arc(cx, cy, rInner * 0.85, 0, 2 * Math.PI);
  ctx.fillStyle = `rgba(241, 196, 15, ${0.15 + 0.85 * state.heat})`;
  ctx.fill();
  ctx.strokeStyle = "#1b2631";
  ctx.stroke();

  // radar modules as small arcs along the lower periphery
  boresights.forEach((b) => {
    const { start, end } = sectorAngles(b);
    ctx.beginPath();
    ctx.arc(cx, cy, rInner * 1.02, start, end);
    ctx.strokeStyle = "#3498db";
    ctx.lineWidth = 6;
    ctx.stroke();
    ctx.lineWidth = 1;
  });

  if (!state.connected) {
    ctx.fillStyle = "rgba(44, 62, 80, 0.55)";
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = "#ecf0f1";
    ctx.font = "20px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("disconnected - retrying", cx, height / 2);
  }
}
