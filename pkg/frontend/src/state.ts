// Pure ViewState reducer. No fetches, no DOM: given a state and an action
// it returns the next state, so every transition is unit-testable. The URL
// codec round-trips the state so a reload restores the exact view.

import {
  ComparisonSlot,
  PanelMode,
  TrajectorySummary,
  ViewState,
  initialViewState,
} from "./types.js";

export type Action =
  | { type: "trajectories-loaded"; trajectories: TrajectorySummary[] }
  | { type: "select-trajectory"; id: string }
  | { type: "set-step"; step: number }
  | { type: "set-metric"; metric: string | null }
  | { type: "set-mode"; mode: PanelMode }
  | { type: "set-comparison-slot"; slot: 0 | 1; selection: ComparisonSlot }
  | { type: "clear-comparison" };

function clampStep(step: number, stepCount: number): number {
  if (stepCount <= 0) return 0;
  return Math.min(Math.max(Math.trunc(step), 0), stepCount - 1);
}

function stepCountOf(trajectories: TrajectorySummary[], id: string | null): number {
  const found = trajectories.find((t) => t.id === id);
  return found ? found.steps : 0;
}

export function reduce(state: ViewState, action: Action): ViewState {
  switch (action.type) {
    case "trajectories-loaded": {
      // keep the selection when it survives the refresh, else reset it
      const stillThere = action.trajectories.some((t) => t.id === state.selectedId);
      const selectedId = stillThere ? state.selectedId : null;
      const stepCount = stepCountOf(action.trajectories, selectedId);
      return {
        ...state,
        trajectories: action.trajectories,
        selectedId,
        stepCount,
        step: clampStep(state.step, stepCount),
      };
    }
    case "select-trajectory": {
      const stepCount = stepCountOf(state.trajectories, action.id);
      if (stepCount === 0) return state; // unknown id: refuse the transition
      return { ...state, selectedId: action.id, stepCount, step: 0 };
    }
    case "set-step":
      return { ...state, step: clampStep(action.step, state.stepCount) };
    case "set-metric":
      return { ...state, activeMetric: action.metric };
    case "set-mode":
      return { ...state, mode: action.mode };
    case "set-comparison-slot": {
      const steps = stepCountOf(state.trajectories, action.selection.trajectoryId);
      if (steps === 0) return state;
      const slot: ComparisonSlot = {
        trajectoryId: action.selection.trajectoryId,
        step: clampStep(action.selection.step, steps),
      };
      const comparison: ViewState["comparison"] =
        action.slot === 0 ? [slot, state.comparison[1]] : [state.comparison[0], slot];
      return { ...state, comparison };
    }
    case "clear-comparison":
      return { ...state, comparison: [null, null] };
  }
}

export function comparisonReady(state: ViewState): boolean {
  return state.mode === "compare" && state.comparison[0] !== null && state.comparison[1] !== null;
}

// --- URL <-> state -------------------------------------------------------

function encodeSlot(slot: ComparisonSlot | null): string {
  return slot ? `${encodeURIComponent(slot.trajectoryId)}:${slot.step}` : "";
}

function decodeSlot(raw: string | null): ComparisonSlot | null {
  if (!raw) return null;
  const cut = raw.lastIndexOf(":");
  if (cut <= 0) return null;
  const step = Number(raw.slice(cut + 1));
  if (!Number.isInteger(step) || step < 0) return null;
  return { trajectoryId: decodeURIComponent(raw.slice(0, cut)), step };
}

export function encodeState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.selectedId) params.set("traj", state.selectedId);
  if (state.step > 0) params.set("step", String(state.step));
  if (state.activeMetric) params.set("metric", state.activeMetric);
  if (state.mode !== "explore") params.set("mode", state.mode);
  if (state.comparison[0]) params.set("a", encodeSlot(state.comparison[0]));
  if (state.comparison[1]) params.set("b", encodeSlot(state.comparison[1]));
  return params.toString();
}

// Decoding happens before trajectory metadata arrives, so step bounds are
// re-clamped by the trajectories-loaded / select-trajectory transitions.
export function decodeState(query: string): ViewState {
  const params = new URLSearchParams(query);
  const mode = params.get("mode") === "compare" ? "compare" : "explore";
  return {
    ...initialViewState,
    selectedId: params.get("traj"),
    step: Math.max(Number(params.get("step") ?? 0) || 0, 0),
    activeMetric: params.get("metric"),
    mode,
    comparison: [decodeSlot(params.get("a")), decodeSlot(params.get("b"))],
  };
}

export function applyUrlState(decoded: ViewState, trajectories: TrajectorySummary[]): ViewState {
  let state = reduce({ ...initialViewState }, { type: "trajectories-loaded", trajectories });
  if (decoded.selectedId) {
    state = reduce(state, { type: "select-trajectory", id: decoded.selectedId });
    state = reduce(state, { type: "set-step", step: decoded.step });
  }
  state = reduce(state, { type: "set-metric", metric: decoded.activeMetric });
  state = reduce(state, { type: "set-mode", mode: decoded.mode });
  for (const slot of [0, 1] as const) {
    const sel = decoded.comparison[slot];
    if (sel) state = reduce(state, { type: "set-comparison-slot", slot, selection: sel });
  }
  return state;
}
