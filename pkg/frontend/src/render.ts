/** Canvas rendering of a snapshot: a pure function of (snapshot, camera).
 *
 * Visual grammar: operator mode means dashed red, autonomy mode means solid
 * black (opacity = mode weight), robot as a brown arrow along u_s, obstacles
 * as gray circles, goal as a green ring.  The draw surface is a minimal
 * structural subset of CanvasRenderingContext2D so tests can record calls.
 */

import { StateSnapshot } from "./protocol";

export interface Camera {
  /** World-to-screen: screen = (world - center) * scale, y flipped. */
  centerX: number;
  centerY: number;
  scale: number;
  width: number;
  height: number;
}

export interface DrawSurface {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  setLineDash(segments: number[]): void;
  // CanvasRenderingContext2D widens these to gradients/patterns too
  strokeStyle: string | unknown;
  fillStyle: string | unknown;
  lineWidth: number;
  globalAlpha: number;
}

export function toScreen(cam: Camera, x: number, y: number): [number, number] {
  return [
    cam.width / 2 + (x - cam.centerX) * cam.scale,
    cam.height / 2 - (y - cam.centerY) * cam.scale,
  ];
}

function polyline(ctx: DrawSurface, cam: Camera, pts: [number, number][]): void {
  ctx.beginPath();
  pts.forEach(([x, y], i) => {
    const [sx, sy] = toScreen(cam, x, y);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
}

export const OPERATOR_STROKE = "#cc2222";
export const AUTONOMY_STROKE = "#000000";
export const ROBOT_STROKE = "#8b4513";
export const MIN_MODE_ALPHA = 0.15;

export function renderSnapshot(
  ctx: DrawSurface,
  cam: Camera,
  snap: StateSnapshot,
): void {
  ctx.clearRect(0, 0, cam.width, cam.height);
  ctx.setLineDash([]);
  ctx.globalAlpha = 1;

  for (const [, pos, visible] of snap.obstacles) {
    const [sx, sy] = toScreen(cam, pos[0], pos[1]);
    ctx.beginPath();
    ctx.arc(sx, sy, 0.4 * cam.scale, 0, 2 * Math.PI);
    ctx.fillStyle = visible ? "#888888" : "#dddddd";
    ctx.fill();
  }

  // autonomy futures: solid black, opacity by weight
  ctx.setLineDash([]);
  ctx.strokeStyle = AUTONOMY_STROKE;
  ctx.lineWidth = 1.5;
  for (const [, weight, pts] of snap.mode_summary.autonomy) {
    ctx.globalAlpha = Math.max(weight, MIN_MODE_ALPHA);
    polyline(ctx, cam, pts);
  }

  // operator futures: dashed red, opacity by weight
  ctx.setLineDash([6, 4]);
  ctx.strokeStyle = OPERATOR_STROKE;
  for (const [, weight, pts] of snap.mode_summary.operator) {
    ctx.globalAlpha = Math.max(weight, MIN_MODE_ALPHA);
    polyline(ctx, cam, pts);
  }

  // the shared-control choice: a brown arrow from the robot along u_s
  ctx.setLineDash([]);
  ctx.globalAlpha = 1;
  ctx.strokeStyle = ROBOT_STROKE;
  ctx.lineWidth = 2.5;
  const [rx, ry] = snap.robot;
  const [ux, uy] = snap.u_s;
  polyline(ctx, cam, [
    [rx, ry],
    [rx + ux * 0.8, ry + uy * 0.8],
  ]);
  const [sx, sy] = toScreen(cam, rx, ry);
  ctx.beginPath();
  ctx.arc(sx, sy, 0.3 * cam.scale, 0, 2 * Math.PI);
  ctx.fillStyle = ROBOT_STROKE;
  ctx.fill();

  ctx.beginPath();
  const [gx, gy] = toScreen(cam, snap.goal[0], snap.goal[1]);
  ctx.arc(gx, gy, 0.3 * cam.scale, 0, 2 * Math.PI);
  ctx.strokeStyle = "#118811";
  ctx.lineWidth = 2;
  ctx.stroke();
}
