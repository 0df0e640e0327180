export { ApiClient, ApiError, type FetchLike, type PollOptions } from "./api/client.js";
export * from "./api/types.js";
export { StudioStore, type InlineError, type SubmitStepInput } from "./state/store.js";
export {
  buildViewModel,
  serializeViewModel,
  type CompareView,
  type StepView,
  type StudioViewModel,
} from "./state/viewModel.js";
export { clampPosition, compareStateFor, type CompareState } from "./ui/compare.js";
export {
  BLOCKED_DONE_STEP,
  BLOCKED_REMOVE_PENDING,
  GUIDANCE_REFLECTIVE_LAST,
  checkMove,
  drawSeed,
  movePermutation,
  planRemove,
  reflectiveGuidance,
} from "./ui/editStack.js";
export {
  CanvasSelection,
  validateCrop,
  type GestureResult,
  type ImageExtent,
  type MaskOverlay,
  type MaterialLibraryItem,
  type SelectionTool,
} from "./ui/selection.js";
export {
  renderEditStack,
  renderGuidance,
  renderMaterialLibrary,
  renderOverlays,
} from "./ui/render.js";
export { Studio, mountStudio, type StudioElements } from "./studio.js";
