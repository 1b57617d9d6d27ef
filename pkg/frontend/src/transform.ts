// Workspace <-> canvas pixel mapping. Canvas y grows downward, workspace y
// upward; the two conversions are exact inverses of each other.

export interface WorkspaceBounds {
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
}

export class CanvasTransform {
  constructor(
    readonly bounds: WorkspaceBounds,
    readonly width: number,
    readonly height: number,
  ) {}

  toCanvas(x: number, y: number): [number, number] {
    const b = this.bounds;
    const px = ((x - b.xmin) / (b.xmax - b.xmin)) * this.width;
    const py = this.height - ((y - b.ymin) / (b.ymax - b.ymin)) * this.height;
    return [px, py];
  }

  toWorkspace(px: number, py: number): [number, number] {
    const b = this.bounds;
    const x = b.xmin + (px / this.width) * (b.xmax - b.xmin);
    const y = b.ymin + ((this.height - py) / this.height) * (b.ymax - b.ymin);
    return [x, y];
  }

  // scale for radii drawn in workspace units (x axis)
  scaleX(r: number): number {
    const b = this.bounds;
    return (r / (b.xmax - b.xmin)) * this.width;
  }

  clampToWorkspace(x: number, y: number): [number, number] {
    const b = this.bounds;
    return [
      Math.min(b.xmax, Math.max(b.xmin, x)),
      Math.min(b.ymax, Math.max(b.ymin, y)),
    ];
  }

  inWorkspace(x: number, y: number): boolean {
    const b = this.bounds;
    return x >= b.xmin && x <= b.xmax && y >= b.ymin && y <= b.ymax;
  }
}
