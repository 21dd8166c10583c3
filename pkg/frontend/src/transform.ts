/**
 * Canvas pixels <-> field meters. The field is fit into the canvas with a
 * uniform scale and centered (letterboxed); canvas y grows downward while
 * field y grows upfield, so the vertical axis flips.
 */
import type { Workspace } from "./schema.js";

export interface CanvasSize {
  width: number;
  height: number;
}

export class FieldTransform {
  private readonly scale: number;
  private readonly offsetX: number;
  private readonly offsetY: number;

  constructor(
    private readonly ws: Pick<Workspace, "x_min" | "x_max" | "y_min" | "y_max">,
    private readonly canvas: CanvasSize,
  ) {
    const fieldW = ws.x_max - ws.x_min;
    const fieldH = ws.y_max - ws.y_min;
    this.scale = Math.min(canvas.width / fieldW, canvas.height / fieldH);
    this.offsetX = (canvas.width - fieldW * this.scale) / 2;
    this.offsetY = (canvas.height - fieldH * this.scale) / 2;
  }

  toField(px: number, py: number): [number, number] {
    const x = this.ws.x_min + (px - this.offsetX) / this.scale;
    const y = this.ws.y_max - (py - this.offsetY) / this.scale;
    return [x, y];
  }

  toCanvas(x: number, y: number): [number, number] {
    const px = this.offsetX + (x - this.ws.x_min) * this.scale;
    const py = this.offsetY + (this.ws.y_max - y) * this.scale;
    return [px, py];
  }

  /** True when the canvas point lands inside the field rectangle. */
  hits(px: number, py: number): boolean {
    const [x, y] = this.toField(px, py);
    return (
      x >= this.ws.x_min && x <= this.ws.x_max &&
      y >= this.ws.y_min && y <= this.ws.y_max
    );
  }
}
