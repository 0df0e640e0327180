/**
 * Browser bootstrap: wires the store, renderers and gesture handlers to
 * a host page. All state lives server-side; this file only binds events
 * and re-renders after each store action.
 */

import { ApiClient } from "./api/client.js";
import { StudioStore } from "./state/store.js";
import { compareStateFor } from "./ui/compare.js";
import { renderEditStack, renderGuidance, renderOverlays } from "./ui/render.js";
import type { SelectionTool } from "./ui/selection.js";

export interface StudioElements {
  canvas: HTMLElement;
  overlays: HTMLElement;
  stack: HTMLElement;
  guidance: HTMLElement;
  status: HTMLElement;
  compare: HTMLElement;
}

export class Studio {
  readonly store: StudioStore;
  private dragFrom: number | null = null;
  private compareIndex: number | null = null;

  constructor(
    readonly client: ApiClient,
    readonly elements: StudioElements,
  ) {
    this.store = new StudioStore(client);
  }

  async open(sessionId: string, extent: { width: number; height: number }): Promise<void> {
    await this.store.load(sessionId, extent);
    this.bind();
    this.render();
  }

  setTool(tool: SelectionTool): void {
    this.store.selection?.setTool(tool);
  }

  private bind(): void {
    this.elements.canvas.addEventListener("click", (event) => {
      const rect = this.elements.canvas.getBoundingClientRect();
      const x = Math.floor(event.clientX - rect.left);
      const y = Math.floor(event.clientY - rect.top);
      const gesture = this.store.selection?.clickAt(x, y);
      if (gesture?.accepted) {
        void this.store.segmentPending().then(() => this.render());
      } else {
        this.note(gesture?.reason ?? "gesture rejected");
      }
    });

    this.elements.stack.addEventListener("dragstart", (event) => {
      this.dragFrom = this.stepIndexOf(event.target);
    });
    this.elements.stack.addEventListener("dragover", (event) => event.preventDefault());
    this.elements.stack.addEventListener("drop", (event) => {
      event.preventDefault();
      const to = this.stepIndexOf(event.target);
      if (this.dragFrom === null || to === null) return;
      void this.store.dragReorder(this.dragFrom, to).then((outcome) => {
        if (!outcome.moved) this.note(outcome.reason ?? "move blocked");
        this.render();
      });
      this.dragFrom = null;
    });

    this.elements.stack.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      const index = this.stepIndexOf(target);
      if (index === null) return;
      if (target.classList.contains("reroll")) {
        void this.store.rerollSeed(index).then(() => this.render());
      } else if (target.classList.contains("compare")) {
        this.compareIndex = index;
        this.render();
      }
    });
  }

  private stepIndexOf(target: EventTarget | null): number | null {
    const element = (target as HTMLElement | null)?.closest?.("[data-index]");
    const raw = element?.getAttribute("data-index");
    return raw === null || raw === undefined ? null : Number(raw);
  }

  private note(message: string): void {
    this.elements.status.textContent = message;
  }

  render(): void {
    const vm = this.store.vm;
    const selection = this.store.selection;
    if (!vm || !selection) return;
    this.elements.stack.innerHTML = renderEditStack(
      vm,
      this.store.staleSteps,
      this.store.reflectiveSteps,
    );
    this.elements.overlays.innerHTML = renderOverlays(selection.overlays);
    this.elements.guidance.innerHTML = renderGuidance(this.store.guidance);
    this.elements.status.textContent = this.store.lastError
      ? `${this.store.lastError.action}: ${this.store.lastError.message}`
      : this.store.busy
        ? "working..."
        : "ready";
    if (this.compareIndex !== null) {
      const compare = compareStateFor(vm, this.compareIndex, this.client);
      this.elements.compare.innerHTML = compare.enabled
        ? `<img class="before" src="${compare.beforeUrl}"><img class="after" src="${compare.afterUrl}">`
        : "";
    }
  }
}

export async function mountStudio(
  client: ApiClient,
  elements: StudioElements,
  sessionId: string,
  extent: { width: number; height: number },
): Promise<Studio> {
  const studio = new Studio(client, elements);
  await studio.open(sessionId, extent);
  return studio;
}
