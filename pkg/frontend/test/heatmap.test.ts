import { describe, expect, it } from "vitest";

import { cellValueAt, colorFor, gridToRgba, superlevelArea } from "../src/heatmap";

const BOUNDS = { xmin: 0, ymin: 0, xmax: 1, ymax: 1 };

describe("gridToRgba", () => {
  it("one pixel per cell, rows flipped so max y is at the top", () => {
    // 2x2 grid: bottom row negative, top row positive
    const grid = { resolution: [2, 2] as [number, number], values: [-1, -1, 1, 1] };
    const rgba = gridToRgba(grid, 1);
    expect(rgba.length).toBe(16);
    const px = (i: number, j: number) => [
      rgba[(j * 2 + i) * 4],
      rgba[(j * 2 + i) * 4 + 1],
      rgba[(j * 2 + i) * 4 + 2],
    ];
    // image row 0 = workspace top row (positive -> blue-green: blue > red)
    expect(px(0, 0)[2]).toBeGreaterThan(px(0, 0)[0]);
    // image row 1 = workspace bottom row (negative -> red dominant)
    expect(px(0, 1)[0]).toBeGreaterThan(px(0, 1)[2]);
  });

  it("palette is symmetric around zero and clamped", () => {
    expect(colorFor(0, 1)[0]).toBeGreaterThan(200); // near-white at zero
    expect(colorFor(-99, 1)).toEqual(colorFor(-1, 1));
    expect(colorFor(99, 1)).toEqual(colorFor(1, 1));
  });
});

describe("cellValueAt", () => {
  const grid = {
    resolution: [4, 2] as [number, number],
    values: [0, 1, 2, 3, 10, 11, 12, 13],
  };

  it("nearest-cell lookup matches row-major layout", () => {
    expect(cellValueAt(grid, BOUNDS, 0.1, 0.1)).toBe(0);
    expect(cellValueAt(grid, BOUNDS, 0.9, 0.1)).toBe(3);
    expect(cellValueAt(grid, BOUNDS, 0.1, 0.9)).toBe(10);
    expect(cellValueAt(grid, BOUNDS, 0.6, 0.7)).toBe(12);
  });

  it("returns null outside the bounds", () => {
    expect(cellValueAt(grid, BOUNDS, -0.1, 0.5)).toBeNull();
    expect(cellValueAt(grid, BOUNDS, 0.5, 1.5)).toBeNull();
  });
});

describe("superlevelArea", () => {
  it("counts cells at or above the level", () => {
    const grid = { resolution: [2, 2] as [number, number], values: [0, 0.5, 1.0, 1.5] };
    expect(superlevelArea(grid, BOUNDS, 0)).toBeCloseTo(1.0, 12);
    expect(superlevelArea(grid, BOUNDS, 0.75)).toBeCloseTo(0.5, 12);
    expect(superlevelArea(grid, BOUNDS, 2)).toBe(0);
  });

  it("is monotone nonincreasing in the level", () => {
    const values = Array.from({ length: 100 }, (_, k) => Math.sin(k / 7) * 2);
    const grid = { resolution: [10, 10] as [number, number], values };
    let prev = Infinity;
    for (let tau = -2; tau <= 2; tau += 0.25) {
      const area = superlevelArea(grid, BOUNDS, tau);
      expect(area).toBeLessThanOrEqual(prev + 1e-12);
      prev = area;
    }
  });
});
