// World <-> screen mapping. World y grows up, canvas y grows down.

export class ViewTransform {
  constructor(
    readonly scale: number, // pixels per meter
    readonly offsetX: number,
    readonly offsetY: number, // screen y of world y=0
  ) {}

  /** Fit a world rectangle into a canvas with a uniform margin. */
  static fit(worldW: number, worldH: number, canvasW: number, canvasH: number,
             margin = 24): ViewTransform {
    const scale = Math.min(
      (canvasW - 2 * margin) / worldW,
      (canvasH - 2 * margin) / worldH,
    );
    const offsetX = (canvasW - worldW * scale) / 2;
    const offsetY = canvasH - (canvasH - worldH * scale) / 2;
    return new ViewTransform(scale, offsetX, offsetY);
  }

  toScreen(x: number, y: number): [number, number] {
    return [this.offsetX + x * this.scale, this.offsetY - y * this.scale];
  }

  toWorld(px: number, py: number): [number, number] {
    return [(px - this.offsetX) / this.scale, (this.offsetY - py) / this.scale];
  }

  /** Meters to pixels for lengths (no offset). */
  px(meters: number): number {
    return meters * this.scale;
  }
}
