/**
 * Ordered edit stack interactions: drag-reorder, remove, reroll.
 *
 * Pure planning functions live here so the contract is testable without
 * a DOM: a drag computes one permutation, validation mirrors the server
 * rules (done steps immovable), and the reflective-materials-last
 * guidance is derived from the would-be order.
 */

import type { StudioViewModel } from "../state/viewModel.js";

export interface MoveCheck {
  ok: boolean;
  reason: string | null;
}

export const GUIDANCE_REFLECTIVE_LAST =
  "Reflective materials pick up the edits around them: keep reflective steps " +
  "after the steps whose changes they should mirror.";

export const BLOCKED_DONE_STEP =
  "This step already ran. Roll the plan back first if you need to move it.";

export const BLOCKED_REMOVE_PENDING =
  "Pending steps stay in the plan for its audit trail; reorder them or reroll " +
  "their seed instead.";

/** Permutation (new order of old indices) produced by dragging one step. */
export function movePermutation(length: number, from: number, to: number): number[] {
  if (from < 0 || from >= length || to < 0 || to >= length) {
    throw new RangeError(`drag (${from} -> ${to}) outside 0..${length - 1}`);
  }
  const order = Array.from({ length }, (_, i) => i);
  order.splice(from, 1);
  order.splice(to, 0, from);
  return order;
}

/** Client-side mirror of the server's reorder rules. */
export function checkMove(vm: StudioViewModel, from: number, to: number): MoveCheck {
  const steps = vm.steps;
  if (from === to) return { ok: true, reason: null };
  if (from < 0 || from >= steps.length || to < 0 || to >= steps.length) {
    return { ok: false, reason: "drag outside the stack" };
  }
  const order = movePermutation(steps.length, from, to);
  for (let position = 0; position < order.length; position += 1) {
    const old = order[position]!;
    if (steps[old]!.locked && old !== position) {
      return { ok: false, reason: BLOCKED_DONE_STEP };
    }
  }
  return { ok: true, reason: null };
}

/**
 * Advisory shown when a drag would put a user-marked reflective step
 * ahead of other pending work.
 */
export function reflectiveGuidance(
  vm: StudioViewModel,
  order: number[],
  reflective: ReadonlySet<number>,
): string | null {
  for (let position = 0; position < order.length; position += 1) {
    const old = order[position]!;
    if (!reflective.has(old)) continue;
    for (let later = position + 1; later < order.length; later += 1) {
      const other = order[later]!;
      if (!reflective.has(other) && vm.steps[other]!.status === "pending") {
        return GUIDANCE_REFLECTIVE_LAST;
      }
    }
  }
  return null;
}

export interface RemovePlan {
  ok: boolean;
  /** rollback target (number of done steps to keep) when ok. */
  rollbackTo: number | null;
  reason: string | null;
}

/**
 * "Remove" maps onto the rollback endpoint: only the trailing done step
 * can be unwound (its results stay in the history). Pending steps are
 * part of the plan's audit trail and cannot be deleted server-side.
 */
export function planRemove(vm: StudioViewModel, index: number): RemovePlan {
  const step = vm.steps[index];
  if (!step) return { ok: false, rollbackTo: null, reason: "no such step" };
  if (step.status !== "done") {
    return { ok: false, rollbackTo: null, reason: BLOCKED_REMOVE_PENDING };
  }
  if (index !== vm.doneCount - 1) {
    return {
      ok: false,
      rollbackTo: null,
      reason: "only the most recent completed step can be unwound",
    };
  }
  return { ok: true, rollbackTo: vm.doneCount - 1, reason: null };
}

/** Fresh 63-bit seed as the decimal string the API expects. */
export function drawSeed(random: () => number = Math.random): string {
  const high = BigInt(Math.floor(random() * 0x8000_0000));
  const low = BigInt(Math.floor(random() * 0x1_0000_0000));
  return ((high << 32n) | low).toString(10);
}
