// Canvas rendering of the workspace: heatmap underlay, scenario geometry,
// demonstrations with credit overlay, tau contours, live stroke, robot.

import { CanvasTransform } from "./transform";
import { gridToRgba } from "./heatmap";
import type { GridMsg, ScenarioMsg } from "./types";
import type { Pt } from "./stroke";

export interface DemoTrace {
  id: string;
  outcome: "failed" | "succeeded";
  reward: number;
  points: Pt[];
  credit?: boolean[]; // per point: true = caused_failure
}

export function drawHeatmap(
  ctx: CanvasRenderingContext2D,
  grid: GridMsg,
  tf: CanvasTransform,
): void {
  const [nx, ny] = grid.resolution;
  const rgba = gridToRgba(grid);
  const image = new ImageData(new Uint8ClampedArray(rgba), nx, ny);
  const off = document.createElement("canvas");
  off.width = nx;
  off.height = ny;
  off.getContext("2d")!.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false; // nearest-cell fidelity when upscaling
  ctx.drawImage(off, 0, 0, tf.width, tf.height);
}

export function drawScenario(
  ctx: CanvasRenderingContext2D,
  scenario: ScenarioMsg,
  tf: CanvasTransform,
): void {
  const [ox, oy] = scenario.obstacle_center;
  const [cx, cy] = tf.toCanvas(ox, oy);
  ctx.beginPath();
  ctx.arc(cx, cy, tf.scaleX(scenario.obstacle_radius), 0, 2 * Math.PI);
  ctx.fillStyle = "rgba(60, 60, 60, 0.35)";
  ctx.fill();
  ctx.strokeStyle = "#333";
  ctx.lineWidth = 1.5;
  ctx.stroke();

  const [txw, tyw] = scenario.target;
  const [tx, ty] = tf.toCanvas(txw, tyw);
  ctx.beginPath();
  ctx.arc(tx, ty, tf.scaleX(scenario.target_radius), 0, 2 * Math.PI);
  ctx.strokeStyle = "#2a9d5c";
  ctx.setLineDash([4, 3]);
  ctx.stroke();
  ctx.setLineDash([]);
}

export function demoColor(demo: DemoTrace): string {
  if (demo.outcome === "failed") return "#c0392b";
  return demo.reward >= 1.0 ? "#1f7a4d" : "#d69b2a";
}

export function drawDemo(
  ctx: CanvasRenderingContext2D,
  demo: DemoTrace,
  tf: CanvasTransform,
  highlight: boolean,
): void {
  if (demo.points.length === 0) return;
  ctx.beginPath();
  demo.points.forEach((p, k) => {
    const [px, py] = tf.toCanvas(p.x, p.y);
    if (k === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.strokeStyle = demoColor(demo);
  ctx.lineWidth = highlight ? 3 : 1.5;
  ctx.globalAlpha = highlight ? 1.0 : 0.8;
  ctx.stroke();
  ctx.globalAlpha = 1.0;
  if (demo.credit) {
    demo.points.forEach((p, k) => {
      if (!demo.credit![k]) return;
      const [px, py] = tf.toCanvas(p.x, p.y);
      ctx.beginPath();
      ctx.arc(px, py, 3, 0, 2 * Math.PI);
      ctx.fillStyle = "#e01b24";
      ctx.fill();
    });
  }
}

export function drawContours(
  ctx: CanvasRenderingContext2D,
  contours: [number, number][][],
  tf: CanvasTransform,
): void {
  ctx.strokeStyle = "#5a31d8";
  ctx.lineWidth = 2;
  for (const line of contours) {
    if (line.length < 2) continue;
    ctx.beginPath();
    line.forEach(([x, y], k) => {
      const [px, py] = tf.toCanvas(x, y);
      if (k === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
}

export function drawStroke(
  ctx: CanvasRenderingContext2D,
  points: Pt[],
  tf: CanvasTransform,
  color: string,
): void {
  if (points.length < 2) return;
  ctx.beginPath();
  points.forEach((p, k) => {
    const [px, py] = tf.toCanvas(p.x, p.y);
    if (k === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.setLineDash([6, 4]);
  ctx.stroke();
  ctx.setLineDash([]);
}

export function drawRobot(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  intervened: boolean,
  tf: CanvasTransform,
): void {
  const [px, py] = tf.toCanvas(x, y);
  ctx.beginPath();
  ctx.arc(px, py, 7, 0, 2 * Math.PI);
  ctx.fillStyle = intervened ? "#e01b24" : "#1c71d8";
  ctx.fill();
  ctx.strokeStyle = "#fff";
  ctx.lineWidth = 2;
  ctx.stroke();
}
