/**
 * Canvas selection state: one active tool at a time, prompts collected
 * in image coordinates, received masks as toggleable overlays.
 *
 * Gestures are validated client-side before anything reaches the
 * service; out-of-image clicks are rejected outright.
 */

import type { Prompt } from "../api/types.js";

export type SelectionTool = "point" | "box" | "brush";

export interface ImageExtent {
  width: number;
  height: number;
}

export interface MaskOverlay {
  assetId: string;
  visible: boolean;
  opacity: number;
}

export interface GestureResult {
  accepted: boolean;
  reason: string | null;
}

const OUTSIDE_IMAGE = "selection gestures must land inside the image";

export class CanvasSelection {
  activeTool: SelectionTool = "point";
  readonly pendingPrompts: Prompt[] = [];
  readonly overlays: MaskOverlay[] = [];

  constructor(readonly extent: ImageExtent) {}

  setTool(tool: SelectionTool): void {
    this.activeTool = tool;
  }

  private inBounds(x: number, y: number): boolean {
    return x >= 0 && y >= 0 && x < this.extent.width && y < this.extent.height;
  }

  clickAt(x: number, y: number): GestureResult {
    if (this.activeTool !== "point") {
      return { accepted: false, reason: "point gesture while another tool is active" };
    }
    if (!this.inBounds(x, y)) return { accepted: false, reason: OUTSIDE_IMAGE };
    this.pendingPrompts.push({ kind: "point", x, y });
    return { accepted: true, reason: null };
  }

  dragBox(x0: number, y0: number, x1: number, y1: number): GestureResult {
    if (this.activeTool !== "box") {
      return { accepted: false, reason: "box gesture while another tool is active" };
    }
    const [left, right] = x0 <= x1 ? [x0, x1] : [x1, x0];
    const [top, bottom] = y0 <= y1 ? [y0, y1] : [y1, y0];
    if (!this.inBounds(left, top) || right > this.extent.width || bottom > this.extent.height) {
      return { accepted: false, reason: OUTSIDE_IMAGE };
    }
    if (left === right || top === bottom) {
      return { accepted: false, reason: "box has no area" };
    }
    this.pendingPrompts.push({ kind: "box", x: left, y: top, x1: right, y1: bottom });
    return { accepted: true, reason: null };
  }

  takePrompts(): Prompt[] {
    return this.pendingPrompts.splice(0, this.pendingPrompts.length);
  }

  /** Register masks returned by a segmentation job as visible overlays. */
  attachMasks(assetIds: string[]): void {
    for (const assetId of assetIds) {
      if (!this.overlays.some((overlay) => overlay.assetId === assetId)) {
        this.overlays.push({ assetId, visible: true, opacity: 0.55 });
      }
    }
  }

  toggleOverlay(assetId: string): void {
    const overlay = this.overlays.find((entry) => entry.assetId === assetId);
    if (overlay) overlay.visible = !overlay.visible;
  }

  setOverlayOpacity(assetId: string, opacity: number): void {
    const overlay = this.overlays.find((entry) => entry.assetId === assetId);
    if (overlay) overlay.opacity = Math.min(1, Math.max(0, opacity));
  }
}

export interface MaterialLibraryItem {
  exemplarAsset: string;
  thumbnailUrl: string;
  displayName: string;
  crop: [number, number, number, number] | null;
  extent: ImageExtent;
  /** User-set hint that this material is reflective (ordering advice). */
  reflective: boolean;
}

export function validateCrop(
  item: Pick<MaterialLibraryItem, "extent">,
  crop: [number, number, number, number],
): boolean {
  const [x0, y0, x1, y1] = crop;
  return x0 >= 0 && y0 >= 0 && x0 < x1 && y0 < y1 && x1 <= item.extent.width && y1 <= item.extent.height;
}
