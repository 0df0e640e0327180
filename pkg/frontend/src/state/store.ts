/**
 * Studio store: the single writer for one session.
 *
 * Holds no authoritative state: every mutation issues exactly one service
 * call and then re-reads the session, so the rendered view is always a
 * pure function of server state. While a job for the session is running
 * the store reports busy and conflicting actions are rejected.
 */

import { ApiClient } from "../api/client.js";
import type { JobRecord, ParamsRecord, SessionView } from "../api/types.js";
import {
  checkMove,
  drawSeed,
  movePermutation,
  planRemove,
  reflectiveGuidance,
} from "../ui/editStack.js";
import { CanvasSelection } from "../ui/selection.js";
import { buildViewModel, type StudioViewModel } from "./viewModel.js";

export interface InlineError {
  action: string;
  message: string;
}

export interface SubmitStepInput {
  maskAsset: string;
  exemplarAsset: string;
  crop?: [number, number, number, number];
  seed?: string;
  params?: Partial<ParamsRecord>;
  feather?: number;
}

export class StudioStore {
  view: SessionView | null = null;
  vm: StudioViewModel | null = null;
  selection: CanvasSelection | null = null;
  /** Steps rerolled since they last ran; cleared when the plan is applied. */
  readonly staleSteps = new Set<number>();
  /** Steps the user marked as reflective materials (ordering advice). */
  readonly reflectiveSteps = new Set<number>();
  guidance: string | null = null;
  lastError: InlineError | null = null;
  private running = false;

  constructor(
    readonly client: ApiClient,
    private readonly randomSeed: () => string = drawSeed,
  ) {}

  get busy(): boolean {
    return this.running;
  }

  get sessionId(): string {
    if (!this.view) throw new Error("no session loaded");
    return this.view.id;
  }

  private adopt(view: SessionView): StudioViewModel {
    this.view = view;
    this.vm = buildViewModel(view);
    return this.vm;
  }

  /** Full reconstruction from server state alone (page load path). */
  async load(sessionId: string, extent: { width: number; height: number }): Promise<StudioViewModel> {
    const vm = this.adopt(await this.client.getSession(sessionId));
    this.selection = new CanvasSelection(extent);
    this.selection.attachMasks(vm.segmentationMasks);
    return vm;
  }

  async createSession(
    baseImage: string,
    extent: { width: number; height: number },
  ): Promise<StudioViewModel> {
    const vm = this.adopt(await this.client.createSession(baseImage));
    this.selection = new CanvasSelection(extent);
    return vm;
  }

  async refresh(): Promise<StudioViewModel> {
    const vm = this.adopt(await this.client.getSession(this.sessionId));
    this.selection?.attachMasks(vm.segmentationMasks);
    return vm;
  }

  private async runJob(action: string, submit: () => Promise<JobRecord>): Promise<JobRecord> {
    if (this.running) throw new Error(`cannot ${action}: a job for this session is running`);
    this.running = true;
    try {
      const submitted = await submit();
      const job = await this.client.pollJob(submitted.id);
      if (job.status === "failed") {
        this.lastError = { action, message: job.error?.message ?? "job failed" };
      } else {
        this.lastError = null;
      }
      await this.refresh();
      return job;
    } finally {
      this.running = false;
    }
  }

  /** Submit the collected selection prompts as one segmentation job. */
  async segmentPending(): Promise<JobRecord> {
    const selection = this.selection;
    if (!selection) throw new Error("no session loaded");
    const prompts = selection.takePrompts();
    if (prompts.length === 0) throw new Error("no prompts collected");
    const job = await this.runJob("segment", () => this.client.segment(this.sessionId, prompts));
    if (job.status === "done") {
      selection.attachMasks((job.result as { masks: string[] }).masks);
    }
    return job;
  }

  /** Retry hook for inline failures: re-runs the same action once. */
  async retrySegment(): Promise<JobRecord> {
    return this.runJob("segment", () =>
      this.client.segment(this.sessionId, this.selection?.takePrompts() ?? []),
    );
  }

  async submitStep(input: SubmitStepInput): Promise<JobRecord> {
    const job = await this.runJob("transfer", () =>
      this.client.submitStep(this.sessionId, {
        mask: input.maskAsset,
        exemplar: { image: input.exemplarAsset, crop: input.crop },
        params: { ...input.params, seed: input.seed ?? this.randomSeed() },
        feather: input.feather,
      }),
    );
    return job;
  }

  async applyPlan(upTo?: number): Promise<JobRecord> {
    const job = await this.runJob("apply", () => this.client.applyPlan(this.sessionId, upTo));
    if (job.status === "done") this.staleSteps.clear();
    return job;
  }

  /**
   * Drag a step to a new position. Exactly one reorder call when the move
   * is legal; blocked moves never reach the service.
   */
  async dragReorder(from: number, to: number): Promise<{ moved: boolean; reason: string | null }> {
    const vm = this.vm;
    if (!vm) throw new Error("no session loaded");
    const verdict = checkMove(vm, from, to);
    if (!verdict.ok) {
      this.lastError = { action: "reorder", message: verdict.reason ?? "move blocked" };
      return { moved: false, reason: verdict.reason };
    }
    if (from === to) return { moved: true, reason: null };
    const order = movePermutation(vm.steps.length, from, to);
    this.guidance = reflectiveGuidance(vm, order, this.reflectiveSteps);
    const remap = new Map(order.map((old, position) => [old, position]));
    this.adopt(await this.client.reorder(this.sessionId, order));
    this.remapIndexSets(remap);
    this.lastError = null;
    return { moved: true, reason: null };
  }

  private remapIndexSets(remap: Map<number, number>): void {
    for (const set of [this.staleSteps, this.reflectiveSteps]) {
      const moved = [...set].map((index) => remap.get(index) ?? index);
      set.clear();
      for (const index of moved) set.add(index);
    }
  }

  async rollback(to: number): Promise<StudioViewModel> {
    return this.adopt(await this.client.rollback(this.sessionId, to));
  }

  /** Remove = unwind the trailing done step via rollback (audit kept). */
  async removeStep(index: number): Promise<{ removed: boolean; reason: string | null }> {
    const vm = this.vm;
    if (!vm) throw new Error("no session loaded");
    const plan = planRemove(vm, index);
    if (!plan.ok || plan.rollbackTo === null) {
      this.lastError = { action: "remove", message: plan.reason ?? "remove blocked" };
      return { removed: false, reason: plan.reason };
    }
    await this.rollback(plan.rollbackTo);
    return { removed: true, reason: null };
  }

  /** Assign a fresh (or chosen) seed to a pending step and mark it stale. */
  async rerollSeed(index: number, seed?: string): Promise<string> {
    const next = seed ?? this.randomSeed();
    const view = await this.client.rerollSeed(this.sessionId, index, next);
    this.adopt(view);
    this.staleSteps.add(index);
    return this.vm!.steps[index]!.seed;
  }

  markReflective(index: number, on: boolean): void {
    if (on) this.reflectiveSteps.add(index);
    else this.reflectiveSteps.delete(index);
  }

  /** Brush-refined masks upload as new content-addressed assets. */
  async uploadCorrectedMask(bytes: Uint8Array): Promise<string> {
    const record = await this.client.uploadAsset(bytes, "mask");
    return record.id;
  }
}
