// Payload shapes of the trajectory service REST API, plus the explorer's
// own view state. The UI never recomputes engine math: everything rendered
// is derived from these payloads.

export type TrajectoryKind = "mgm" | "diffusion" | "flow";

export interface TrajectorySummary {
  id: string;
  kind: TrajectoryKind;
  steps: number;
  created_at: string | null;
}

export interface TrajectoryDetail extends TrajectorySummary {
  shape: number[];
  seed: number | null;
  condition: Record<string, string>;
}

export interface StepPayload {
  step: number;
  state: number[];
  mask?: number[];
  confidence?: number[];
}

export interface MetricSeries {
  name: string;
  values: number[];
}

export interface MetricsPayload {
  series: MetricSeries[];
}

export interface ProjectionPayload {
  coords: [number, number][];
  explained_variance: [number, number];
}

export type PanelMode = "explore" | "compare";

export interface ComparisonSlot {
  trajectoryId: string;
  step: number;
}

// Single source of truth for what the five views show. Reducer-owned;
// every transition goes through reduce() in state.ts.
export interface ViewState {
  trajectories: TrajectorySummary[];
  selectedId: string | null;
  stepCount: number;
  step: number;
  activeMetric: string | null;
  mode: PanelMode;
  comparison: [ComparisonSlot | null, ComparisonSlot | null];
}

export const initialViewState: ViewState = {
  trajectories: [],
  selectedId: null,
  stepCount: 0,
  step: 0,
  activeMetric: null,
  mode: "explore",
  comparison: [null, null],
};
