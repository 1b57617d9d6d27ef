// Teleop HUD helpers: h gauge geometry and status text. Pure functions so
// they stay testable without a DOM.

export interface GaugeState {
  fraction: number; // 0..1 fill of the bar
  color: string;
  label: string;
}

const H_LO = -0.6;
const H_HI = 2.0;

export function hGauge(h: number | null, tau: number): GaugeState {
  if (h === null) {
    return { fraction: 0, color: "#999", label: "h: n/a (no model)" };
  }
  const fraction = Math.max(0, Math.min(1, (h - H_LO) / (H_HI - H_LO)));
  let color = "#2a9d5c";
  if (h < tau) color = "#d33d2e";
  else if (h < tau + 0.25) color = "#e6a23c";
  return { fraction, color, label: `h: ${h.toFixed(3)}` };
}

export function interventionLabel(intervened: boolean, softened: boolean): string {
  if (softened) return "SOFTENED";
  return intervened ? "FILTERING" : "nominal";
}

export function keyVector(keys: Set<string>, speed: number): [number, number] {
  let ux = 0;
  let uy = 0;
  if (keys.has("ArrowLeft") || keys.has("a")) ux -= 1;
  if (keys.has("ArrowRight") || keys.has("d")) ux += 1;
  if (keys.has("ArrowDown") || keys.has("s")) uy -= 1;
  if (keys.has("ArrowUp") || keys.has("w")) uy += 1;
  const norm = Math.hypot(ux, uy);
  if (norm === 0) return [0, 0];
  return [(ux / norm) * speed, (uy / norm) * speed];
}
