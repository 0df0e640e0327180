/**
 * Before/after comparison: a split slider over a step's input and output
 * at native resolution. Pure view logic; the assets themselves stream
 * from GET /assets/{id}.
 */

import type { ApiClient } from "../api/client.js";
import type { StudioViewModel } from "../state/viewModel.js";

export interface CompareState {
  enabled: boolean;
  beforeUrl: string | null;
  afterUrl: string | null;
  /** Slider position as a fraction of the width. */
  position: number;
}

export function compareStateFor(
  vm: StudioViewModel,
  index: number,
  client: Pick<ApiClient, "assetUrl">,
  position = 0.5,
): CompareState {
  const step = vm.steps[index];
  if (!step || step.compare === null) {
    return { enabled: false, beforeUrl: null, afterUrl: null, position };
  }
  return {
    enabled: true,
    beforeUrl: client.assetUrl(step.compare.before),
    afterUrl: client.assetUrl(step.compare.after),
    position: clampPosition(position),
  };
}

export function clampPosition(position: number): number {
  return Math.min(1, Math.max(0, position));
}
