/**
 * Wire types for the edit service's JSON API.
 *
 * Field names mirror the server payloads exactly (snake_case); the view
 * model layer owns any reshaping.
 */

export type AssetKind = "image" | "mask" | "depth" | "exemplar" | "result";

export interface AssetRecord {
  id: string;
  kind: AssetKind;
  media_type: string;
  byte_size: number;
  created: string;
}

export type StepStatus = "pending" | "done" | "failed";

export interface ParamsRecord {
  seed: string;
  steps: number;
  guidance_scale: number;
  material_scale: number;
  geometry_scale: number;
  init_mode: string;
  working_size: number;
}

export interface ExemplarRef {
  image: string;
  crop: [number, number, number, number] | null;
  scale_hint: number | null;
  text_hint: string | null;
}

export interface StepRecord {
  region: string;
  exemplar: ExemplarRef;
  params: ParamsRecord;
  feather: number;
  status: StepStatus;
  result: string | null;
  error: string | null;
}

export interface HistoryRecord {
  ts: string;
  step: number;
  result: string;
  request_digest: string;
}

export interface SessionView {
  id: string;
  created: string;
  updated: string;
  base_image: string;
  current_image: string;
  steps: StepRecord[];
  history: HistoryRecord[];
  segmentation_masks: string[];
}

export type JobStatus = "queued" | "running" | "done" | "failed";

export interface JobRecord {
  id: string;
  kind: string;
  status: JobStatus;
  progress: number;
  result: Record<string, unknown> | null;
  error: { type: string; message: string; stage: string | null } | null;
}

export type PromptKind = "point" | "box" | "label";

export interface Prompt {
  kind: PromptKind;
  x?: number;
  y?: number;
  x1?: number;
  y1?: number;
  text?: string;
}

export interface StepSubmission {
  mask: string;
  exemplar: {
    image: string;
    crop?: [number, number, number, number];
    scale_hint?: number;
    text_hint?: string;
  };
  params?: Partial<ParamsRecord>;
  feather?: number;
}
