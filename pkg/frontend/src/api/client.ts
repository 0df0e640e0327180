/**
 * Thin typed client over the edit service's HTTP/JSON API.
 *
 * Every studio mutation goes through exactly one of these calls; the
 * client performs no image processing and keeps no session state.
 */

import type {
  AssetKind,
  AssetRecord,
  JobRecord,
  Prompt,
  SessionView,
  StepSubmission,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (body.detail !== undefined) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private postJson<T>(path: string, body: unknown): Promise<T> {
    return this.requestJson<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  uploadAsset(bytes: Uint8Array | ArrayBuffer, kind: AssetKind): Promise<AssetRecord> {
    const payload = bytes instanceof Uint8Array ? bytes : new Uint8Array(bytes);
    return this.requestJson<AssetRecord>(`/assets?kind=${kind}`, {
      method: "POST",
      headers: { "content-type": "image/png" },
      body: payload as unknown as BodyInit,
    });
  }

  assetUrl(assetId: string): string {
    return `${this.baseUrl}/assets/${assetId}`;
  }

  createSession(baseImage: string): Promise<SessionView> {
    return this.postJson<SessionView>("/sessions", { base_image: baseImage });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.requestJson<SessionView>(`/sessions/${sessionId}`);
  }

  segment(sessionId: string, prompts: Prompt[], backend?: string): Promise<JobRecord> {
    return this.postJson<JobRecord>(`/sessions/${sessionId}/segment`, { prompts, backend });
  }

  submitStep(sessionId: string, step: StepSubmission): Promise<JobRecord> {
    return this.postJson<JobRecord>(`/sessions/${sessionId}/steps`, step);
  }

  applyPlan(sessionId: string, upTo?: number): Promise<JobRecord> {
    return this.postJson<JobRecord>(`/sessions/${sessionId}/apply`, {
      up_to: upTo ?? null,
    });
  }

  reorder(sessionId: string, order: number[]): Promise<SessionView> {
    return this.postJson<SessionView>(`/sessions/${sessionId}/reorder`, { order });
  }

  rollback(sessionId: string, to: number): Promise<SessionView> {
    return this.postJson<SessionView>(`/sessions/${sessionId}/rollback`, { to });
  }

  rerollSeed(sessionId: string, index: number, seed?: string): Promise<SessionView> {
    return this.postJson<SessionView>(`/sessions/${sessionId}/steps/${index}/reroll`, {
      seed: seed ?? null,
    });
  }

  getJob(jobId: string): Promise<JobRecord> {
    return this.requestJson<JobRecord>(`/jobs/${jobId}`);
  }

  /** Poll a job until it reaches a terminal state. */
  async pollJob(jobId: string, options: PollOptions = {}): Promise<JobRecord> {
    const interval = options.intervalMs ?? 50;
    const deadline = Date.now() + (options.timeoutMs ?? 30_000);
    for (;;) {
      const job = await this.getJob(jobId);
      if (job.status === "done" || job.status === "failed") return job;
      if (Date.now() > deadline) {
        throw new ApiError(408, `job ${jobId} still ${job.status} after timeout`);
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }
}
