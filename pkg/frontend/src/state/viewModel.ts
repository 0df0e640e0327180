/**
 * The studio's authoritative view model.
 *
 * Built as a pure function of GET /sessions/{id}, so a full page reload
 * reconstructs the identical view from server state alone. Ephemeral
 * interaction state (active tool, pending prompts, overlay visibility,
 * stale markers) lives elsewhere and is never serialized here.
 */

import type { SessionView, StepRecord, StepStatus } from "../api/types.js";

export interface CompareView {
  /** Asset id of the step's input image. */
  before: string;
  /** Asset id of the step's output image. */
  after: string;
}

export interface StepView {
  index: number;
  status: StepStatus;
  /** Seeds are shown and lockable: lighting-aware workflows depend on reuse. */
  seed: string;
  maskAsset: string;
  exemplarAsset: string;
  crop: [number, number, number, number] | null;
  feather: number;
  resultAsset: string | null;
  error: string | null;
  /** Done steps are locked: immovable and not editable in place. */
  locked: boolean;
  /** Split-slider comparison, available once the step is done. */
  compare: CompareView | null;
}

export interface StudioViewModel {
  sessionId: string;
  updated: string;
  baseImage: string;
  currentImage: string;
  steps: StepView[];
  segmentationMasks: string[];
  doneCount: number;
}

function compareFor(steps: StepRecord[], index: number, baseImage: string): CompareView | null {
  const step = steps[index];
  if (!step || step.status !== "done" || step.result === null) return null;
  let before = baseImage;
  for (let i = 0; i < index; i += 1) {
    const earlier = steps[i];
    if (earlier && earlier.status === "done" && earlier.result !== null) {
      before = earlier.result;
    }
  }
  return { before, after: step.result };
}

export function buildViewModel(view: SessionView): StudioViewModel {
  const steps = view.steps.map((step, index): StepView => {
    return {
      index,
      status: step.status,
      seed: step.params.seed,
      maskAsset: step.region,
      exemplarAsset: step.exemplar.image,
      crop: step.exemplar.crop,
      feather: step.feather,
      resultAsset: step.result,
      error: step.error,
      locked: step.status === "done",
      compare: compareFor(view.steps, index, view.base_image),
    };
  });
  return {
    sessionId: view.id,
    updated: view.updated,
    baseImage: view.base_image,
    currentImage: view.current_image,
    steps,
    segmentationMasks: [...view.segmentation_masks],
    doneCount: steps.filter((step) => step.status === "done").length,
  };
}

/**
 * Canonical byte representation used by the reconstruction check: two
 * view models are the same view iff their serializations are equal.
 */
export function serializeViewModel(vm: StudioViewModel): string {
  return JSON.stringify(vm, (_key, value: unknown) => {
    if (value !== null && typeof value === "object" && !Array.isArray(value)) {
      const record = value as Record<string, unknown>;
      return Object.fromEntries(Object.keys(record).sort().map((k) => [k, record[k]]));
    }
    return value;
  });
}
