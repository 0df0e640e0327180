/**
 * Edit-stack contract: drag-reorder issues exactly one reorder call and
 * the rendered order matches the subsequent GET /sessions response; done
 * steps are immovable; remove and reroll map onto the documented
 * endpoints.
 */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api/client.js";
import { StudioStore } from "../src/state/store.js";
import {
  BLOCKED_DONE_STEP,
  BLOCKED_REMOVE_PENDING,
  GUIDANCE_REFLECTIVE_LAST,
  checkMove,
  drawSeed,
  movePermutation,
  planRemove,
  reflectiveGuidance,
} from "../src/ui/editStack.js";
import { buildViewModel } from "../src/state/viewModel.js";
import type { SessionView, StepRecord } from "../src/api/types.js";
import { MockServer } from "./mockServer.js";

const EXTENT = { width: 64, height: 64 };

function stepRecord(seed: string, status: StepRecord["status"]): StepRecord {
  return {
    region: `m${seed}`,
    exemplar: { image: `e${seed}`, crop: null, scale_hint: null, text_hint: null },
    params: {
      seed,
      steps: 30,
      guidance_scale: 5,
      material_scale: 1,
      geometry_scale: 1,
      init_mode: "foreground-grayscale",
      working_size: 1024,
    },
    feather: 8,
    status,
    result: status === "done" ? `r${seed}` : null,
    error: null,
  };
}

function vmWith(statuses: StepRecord["status"][]) {
  const view: SessionView = {
    id: "s",
    created: "t",
    updated: "t",
    base_image: "base",
    current_image: "base",
    steps: statuses.map((status, index) => stepRecord(String(index), status)),
    history: [],
    segmentation_masks: [],
  };
  return buildViewModel(view);
}

async function storeWithThreePending() {
  const server = new MockServer(EXTENT);
  const client = new ApiClient("http://mock", server.fetch);
  const store = new StudioStore(client, () => "555");
  const base = await client.uploadAsset(new Uint8Array([1]), "image");
  const mask = await client.uploadAsset(new Uint8Array([2]), "mask");
  const exemplar = await client.uploadAsset(new Uint8Array([3]), "exemplar");
  await store.createSession(base.id, EXTENT);
  for (const seed of ["10", "11", "12"]) {
    await store.submitStep({ maskAsset: mask.id, exemplarAsset: exemplar.id, seed });
  }
  // all three ran; rewind so they are pending and movable
  await store.rollback(0);
  return { server, client, store };
}

describe("movePermutation", () => {
  it("moves one element and keeps the rest stable", () => {
    expect(movePermutation(4, 0, 2)).toEqual([1, 2, 0, 3]);
    expect(movePermutation(4, 3, 0)).toEqual([3, 0, 1, 2]);
    expect(movePermutation(3, 1, 1)).toEqual([0, 1, 2]);
  });

  it("rejects out-of-range drags", () => {
    expect(() => movePermutation(3, 3, 0)).toThrow(RangeError);
  });
});

describe("checkMove", () => {
  it("allows pending swaps and blocks moving a done step", () => {
    const vm = vmWith(["done", "pending", "pending"]);
    expect(checkMove(vm, 1, 2).ok).toBe(true);
    expect(checkMove(vm, 0, 2)).toEqual({ ok: false, reason: BLOCKED_DONE_STEP });
  });

  it("blocks displacing a done step indirectly", () => {
    const vm = vmWith(["pending", "done", "pending"]);
    // dragging 0 to the end would shift the done step out of place
    expect(checkMove(vm, 0, 2).ok).toBe(false);
  });
});

describe("reflective guidance", () => {
  it("warns when a reflective step would run before pending work", () => {
    const vm = vmWith(["pending", "pending", "pending"]);
    const order = movePermutation(3, 2, 0); // move last (reflective) first
    expect(reflectiveGuidance(vm, order, new Set([2]))).toBe(GUIDANCE_REFLECTIVE_LAST);
  });

  it("stays quiet when reflective steps remain last", () => {
    const vm = vmWith(["pending", "pending", "pending"]);
    const order = movePermutation(3, 0, 1);
    expect(reflectiveGuidance(vm, order, new Set([2]))).toBeNull();
  });
});

describe("planRemove", () => {
  it("maps the trailing done step onto rollback", () => {
    const vm = vmWith(["done", "done", "pending"]);
    expect(planRemove(vm, 1)).toEqual({ ok: true, rollbackTo: 1, reason: null });
  });

  it("blocks pending steps and non-trailing done steps", () => {
    const vm = vmWith(["done", "done", "pending"]);
    expect(planRemove(vm, 2).reason).toBe(BLOCKED_REMOVE_PENDING);
    expect(planRemove(vm, 0).ok).toBe(false);
  });
});

describe("drawSeed", () => {
  it("produces decimal strings that fit 63 bits", () => {
    for (let i = 0; i < 20; i += 1) {
      const seed = BigInt(drawSeed());
      expect(seed >= 0n && seed < 1n << 63n).toBe(true);
    }
  });
});

describe("acceptance: edit-stack contract", () => {
  it("drag-reorder issues exactly one reorder call and matches GET /sessions", async () => {
    const { server, client, store } = await storeWithThreePending();
    const before = server.counts["reorder"] ?? 0;

    const outcome = await store.dragReorder(2, 0);
    expect(outcome.moved).toBe(true);
    expect((server.counts["reorder"] ?? 0) - before).toBe(1);

    const rendered = store.vm!.steps.map((step) => step.seed);
    const serverView = await client.getSession(store.sessionId);
    expect(rendered).toEqual(serverView.steps.map((step) => step.params.seed));
    expect(rendered).toEqual(["12", "10", "11"]);
  });

  it("done steps are immovable: blocked client-side with zero calls, and refused by the server", async () => {
    const { server, client, store } = await storeWithThreePending();
    await store.applyPlan(); // everything done again
    const before = server.counts["reorder"] ?? 0;

    const outcome = await store.dragReorder(0, 2);
    expect(outcome).toEqual({ moved: false, reason: BLOCKED_DONE_STEP });
    expect(server.counts["reorder"] ?? 0).toBe(before);
    expect(store.lastError?.action).toBe("reorder");

    // the server enforces the same rule if called directly
    await expect(client.reorder(store.sessionId, [2, 1, 0])).rejects.toMatchObject({ status: 400 });
  });

  it("reroll assigns a fresh seed server-side and marks the step stale", async () => {
    const { store } = await storeWithThreePending();
    const seed = await store.rerollSeed(1, "7777");
    expect(seed).toBe("7777");
    expect(store.vm!.steps[1]!.seed).toBe("7777");
    expect(store.staleSteps.has(1)).toBe(true);
    await store.applyPlan();
    expect(store.staleSteps.size).toBe(0);
    expect(store.vm!.steps[1]!.status).toBe("done");
  });

  it("remove unwinds the trailing done step via rollback and blocks pending steps", async () => {
    const { server, store } = await storeWithThreePending();
    await store.applyPlan();
    const removed = await store.removeStep(2);
    expect(removed.moved ?? removed.removed).toBe(true);
    expect(store.vm!.steps[2]!.status).toBe("pending");
    expect(server.counts["rollback"]).toBe(2); // one from setup, one from remove

    const blocked = await store.removeStep(2);
    expect(blocked.removed).toBe(false);
    expect(blocked.reason).toBe(BLOCKED_REMOVE_PENDING);
  });
});
