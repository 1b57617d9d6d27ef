// Grid rendering: the service's row-major h field becomes RGBA pixels,
// one grid cell per pixel (the canvas upscales with nearest-neighbor so
// zoomed pixels keep cell fidelity). Diverging palette: unsafe (h < 0) in
// reds, safe in blue-greens, white near zero.

export interface GridLike {
  resolution: [number, number];
  values: number[];
}

export function colorFor(value: number, scale: number): [number, number, number] {
  const t = Math.max(-1, Math.min(1, value / scale));
  if (t < 0) {
    const k = -t;
    return [255, Math.round(235 - 170 * k), Math.round(235 - 195 * k)];
  }
  const k = t;
  return [Math.round(245 - 190 * k), Math.round(248 - 90 * k), Math.round(250 - 60 * k)];
}

/**
 * RGBA buffer for the grid, flipped so row 0 of the image is the top of the
 * workspace (max y). Length = nx * ny * 4.
 */
export function gridToRgba(grid: GridLike, scale?: number): Uint8ClampedArray {
  const [nx, ny] = grid.resolution;
  const values = grid.values;
  let s = scale ?? 0;
  if (!s) {
    for (const v of values) s = Math.max(s, Math.abs(v));
    if (s === 0) s = 1;
  }
  const out = new Uint8ClampedArray(nx * ny * 4);
  for (let j = 0; j < ny; j++) {
    const srcRow = ny - 1 - j; // image y down, workspace y up
    for (let i = 0; i < nx; i++) {
      const [r, g, b] = colorFor(values[srcRow * nx + i], s);
      const o = (j * nx + i) * 4;
      out[o] = r;
      out[o + 1] = g;
      out[o + 2] = b;
      out[o + 3] = 235;
    }
  }
  return out;
}

/** Value at the cell containing a workspace point (nearest-cell lookup). */
export function cellValueAt(
  grid: GridLike,
  bounds: { xmin: number; ymin: number; xmax: number; ymax: number },
  x: number,
  y: number,
): number | null {
  const [nx, ny] = grid.resolution;
  const i = Math.floor(((x - bounds.xmin) / (bounds.xmax - bounds.xmin)) * nx);
  const j = Math.floor(((y - bounds.ymin) / (bounds.ymax - bounds.ymin)) * ny);
  if (i < 0 || i >= nx || j < 0 || j >= ny) return null;
  return grid.values[j * nx + i];
}

/** Area of {h >= tau} in workspace units, counted in whole grid cells. */
export function superlevelArea(
  grid: GridLike,
  bounds: { xmin: number; ymin: number; xmax: number; ymax: number },
  tau: number,
): number {
  const [nx, ny] = grid.resolution;
  const cell =
    ((bounds.xmax - bounds.xmin) / nx) * ((bounds.ymax - bounds.ymin) / ny);
  let count = 0;
  for (const v of grid.values) if (v >= tau) count++;
  return count * cell;
}
