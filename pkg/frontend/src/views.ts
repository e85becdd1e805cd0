// Pure view-model builders: they turn API payloads into cell grids and
// chart geometry, and are where the rendering logic is actually tested.
// The DOM layer in render.ts only paints what these return.

import { MetricSeries, ProjectionPayload, StepPayload } from "./types.js";

export interface HeatmapCell {
  index: number;
  value: number;
  // 0..1 position inside the value range of the snapshot (0.5 when flat)
  intensity: number;
  masked: boolean;
}

export interface HeatmapModel {
  columns: number;
  rows: number;
  cells: HeatmapCell[];
  min: number;
  max: number;
  maskedFraction: number;
}

// Snapshots are flat vectors; lay them out on a near-square grid so large
// states stay readable.
export function gridShape(length: number): { columns: number; rows: number } {
  const columns = Math.max(1, Math.ceil(Math.sqrt(length)));
  return { columns, rows: Math.max(1, Math.ceil(length / columns)) };
}

export function heatmapModel(step: StepPayload): HeatmapModel {
  const { state, mask } = step;
  const { columns, rows } = gridShape(state.length);
  let min = Infinity;
  let max = -Infinity;
  for (const v of state) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (state.length === 0) {
    min = 0;
    max = 0;
  }
  const span = max - min;
  let maskedCount = 0;
  const cells = state.map((value, index) => {
    const masked = mask ? mask[index] === 1 : false;
    if (masked) maskedCount += 1;
    return {
      index,
      value,
      intensity: span > 0 ? (value - min) / span : 0.5,
      masked,
    };
  });
  return {
    columns,
    rows,
    cells,
    min,
    max,
    maskedFraction: state.length ? maskedCount / state.length : 0,
  };
}

export interface DiffCell {
  index: number;
  delta: number;
  // signed intensity in [-1, 1], scaled by the largest |delta|
  intensity: number;
  newlyUnmasked: boolean;
}

export interface DiffModel {
  columns: number;
  rows: number;
  cells: DiffCell[];
  maxAbsDelta: number;
  allZero: boolean;
}

// Signed per-cell difference b - a. Shapes must match; the comparison view
// surfaces the error instead of guessing an alignment.
export function diffModel(a: StepPayload, b: StepPayload): DiffModel {
  if (a.state.length !== b.state.length) {
    throw new Error(
      `shape mismatch: ${a.state.length} vs ${b.state.length} elements`,
    );
  }
  const { columns, rows } = gridShape(a.state.length);
  let maxAbs = 0;
  for (let i = 0; i < a.state.length; i++) {
    maxAbs = Math.max(maxAbs, Math.abs(b.state[i] - a.state[i]));
  }
  const cells = a.state.map((va, index) => {
    const delta = b.state[index] - va;
    const wasMasked = a.mask ? a.mask[index] === 1 : false;
    const isMasked = b.mask ? b.mask[index] === 1 : false;
    return {
      index,
      delta,
      intensity: maxAbs > 0 ? delta / maxAbs : 0,
      newlyUnmasked: wasMasked && !isMasked,
    };
  });
  return { columns, rows, cells, maxAbsDelta: maxAbs, allZero: maxAbs === 0 };
}

export interface ChartPoint {
  step: number;
  value: number;
  x: number;
  y: number;
}

export interface ChartModel {
  name: string;
  points: ChartPoint[];
  yMin: number;
  yMax: number;
}

// Map a metric series onto viewport coordinates; points carry their step
// index so a click can drive the step view.
export function metricChartModel(
  series: MetricSeries,
  width: number,
  height: number,
  pad = 6,
): ChartModel {
  const values = series.values;
  let yMin = Math.min(...values);
  let yMax = Math.max(...values);
  if (!values.length) {
    yMin = 0;
    yMax = 1;
  }
  if (yMax === yMin) {
    yMax = yMin + 1;
  }
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const denom = Math.max(values.length - 1, 1);
  const points = values.map((value, step) => ({
    step,
    value,
    x: pad + (step / denom) * innerW,
    y: pad + (1 - (value - yMin) / (yMax - yMin)) * innerH,
  }));
  return { name: series.name, points, yMin, yMax };
}

export function nearestChartPoint(model: ChartModel, x: number): ChartPoint | null {
  let best: ChartPoint | null = null;
  let bestDist = Infinity;
  for (const point of model.points) {
    const d = Math.abs(point.x - x);
    if (d < bestDist) {
      best = point;
      bestDist = d;
    }
  }
  return best;
}

export interface ProjectionPoint {
  step: number;
  x: number;
  y: number;
}

export interface ProjectionModel {
  points: ProjectionPoint[];
  explained: [number, number];
}

export function projectionModel(
  payload: ProjectionPayload,
  width: number,
  height: number,
  pad = 10,
): ProjectionModel {
  const coords = payload.coords;
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const [cx, cy] of coords) {
    xMin = Math.min(xMin, cx);
    xMax = Math.max(xMax, cx);
    yMin = Math.min(yMin, cy);
    yMax = Math.max(yMax, cy);
  }
  if (!coords.length) {
    xMin = xMax = yMin = yMax = 0;
  }
  const spanX = xMax - xMin || 1;
  const spanY = yMax - yMin || 1;
  const points = coords.map(([cx, cy], step) => ({
    step,
    x: pad + ((cx - xMin) / spanX) * (width - 2 * pad),
    y: pad + (1 - (cy - yMin) / spanY) * (height - 2 * pad),
  }));
  return { points, explained: payload.explained_variance };
}
