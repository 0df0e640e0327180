/**
 * HTML renderers for the studio panels.
 *
 * Pure string producers so they are testable without a DOM; the browser
 * entry point assigns the output to container elements and wires events.
 */

import type { StudioViewModel } from "../state/viewModel.js";
import type { MaskOverlay, MaterialLibraryItem } from "./selection.js";

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderEditStack(
  vm: StudioViewModel,
  stale: ReadonlySet<number>,
  reflective: ReadonlySet<number>,
): string {
  const rows = vm.steps.map((step) => {
    const classes = ["step", step.status];
    if (step.locked) classes.push("locked");
    if (stale.has(step.index)) classes.push("stale");
    const badges: string[] = [];
    if (reflective.has(step.index)) badges.push('<span class="badge">reflective</span>');
    if (stale.has(step.index)) badges.push('<span class="badge">stale</span>');
    const drag = step.locked
      ? '<span class="grip disabled" title="Completed steps are locked"></span>'
      : '<span class="grip" draggable="true"></span>';
    return (
      `<li class="${classes.join(" ")}" data-index="${step.index}">` +
      drag +
      `<span class="status">${step.status}</span>` +
      `<span class="seed" title="generation seed">seed ${escapeHtml(step.seed)}</span>` +
      badges.join("") +
      (step.error ? `<span class="error">${escapeHtml(step.error)}</span>` : "") +
      `<button class="reroll" ${step.locked ? "disabled" : ""}>reroll</button>` +
      `<button class="compare" ${step.compare ? "" : "disabled"}>compare</button>` +
      "</li>"
    );
  });
  return `<ol class="edit-stack">${rows.join("")}</ol>`;
}

export function renderOverlays(overlays: readonly MaskOverlay[]): string {
  const items = overlays.map(
    (overlay) =>
      `<div class="overlay${overlay.visible ? "" : " hidden"}" ` +
      `data-asset="${escapeHtml(overlay.assetId)}" ` +
      `style="opacity:${overlay.opacity}"></div>`,
  );
  return items.join("");
}

export function renderMaterialLibrary(items: readonly MaterialLibraryItem[]): string {
  const cards = items.map(
    (item) =>
      `<figure class="material" data-asset="${escapeHtml(item.exemplarAsset)}">` +
      `<img src="${escapeHtml(item.thumbnailUrl)}" alt="${escapeHtml(item.displayName)}">` +
      `<figcaption>${escapeHtml(item.displayName)}${item.reflective ? " (reflective)" : ""}` +
      "</figcaption></figure>",
  );
  return `<div class="material-library">${cards.join("")}</div>`;
}

export function renderGuidance(message: string | null): string {
  return message === null ? "" : `<aside class="guidance">${escapeHtml(message)}</aside>`;
}
