// View-model builders: heatmap cells, difference layers, chart geometry.

import { describe, expect, it } from "vitest";

import { StepPayload } from "../src/types.js";
import {
  diffModel,
  gridShape,
  heatmapModel,
  metricChartModel,
  nearestChartPoint,
  projectionModel,
} from "../src/views.js";

const step = (state: number[], mask?: number[]): StepPayload => ({
  step: 0,
  state,
  ...(mask ? { mask } : {}),
});

describe("gridShape", () => {
  it("lays lengths out near-square", () => {
    expect(gridShape(1)).toEqual({ columns: 1, rows: 1 });
    expect(gridShape(9)).toEqual({ columns: 3, rows: 3 });
    expect(gridShape(10)).toEqual({ columns: 4, rows: 3 });
  });
});

describe("heatmapModel", () => {
  it("normalizes intensities into [0, 1]", () => {
    const model = heatmapModel(step([0, 5, 10]));
    expect(model.cells.map((c) => c.intensity)).toEqual([0, 0.5, 1]);
    expect(model.min).toBe(0);
    expect(model.max).toBe(10);
  });

  it("marks masked cells and reports the masked fraction", () => {
    const model = heatmapModel(step([1, 2, 3, 4], [1, 0, 1, 0]));
    expect(model.cells.filter((c) => c.masked).map((c) => c.index)).toEqual([0, 2]);
    expect(model.maskedFraction).toBe(0.5);
  });

  it("handles constant states without dividing by zero", () => {
    const model = heatmapModel(step([2, 2, 2]));
    expect(model.cells.every((c) => c.intensity === 0.5)).toBe(true);
  });
});

describe("diffModel", () => {
  it("is all zero for identical snapshots", () => {
    const a = step([1, 2, 3, 4], [0, 0, 1, 1]);
    const model = diffModel(a, a);
    expect(model.allZero).toBe(true);
    expect(model.maxAbsDelta).toBe(0);
    expect(model.cells.every((c) => c.delta === 0 && c.intensity === 0)).toBe(true);
    expect(model.cells.every((c) => !c.newlyUnmasked)).toBe(true);
  });

  it("reports signed deltas scaled by the largest magnitude", () => {
    const model = diffModel(step([0, 0]), step([1, -2]));
    expect(model.cells[0].delta).toBe(1);
    expect(model.cells[1].delta).toBe(-2);
    expect(model.cells[0].intensity).toBeCloseTo(0.5, 12);
    expect(model.cells[1].intensity).toBe(-1);
  });

  it("flags exactly the newly unmasked cells between adjacent decode steps", () => {
    const before = step([9, 9, 9, 9], [1, 1, 1, 1]);
    const after = step([3, 9, 2, 9], [0, 1, 0, 1]);
    const model = diffModel(before, after);
    expect(model.cells.filter((c) => c.newlyUnmasked).map((c) => c.index))
      .toEqual([0, 2]);
  });

  it("throws on shape mismatch", () => {
    expect(() => diffModel(step([1, 2]), step([1, 2, 3]))).toThrow(/shape mismatch/);
  });
});

describe("metricChartModel", () => {
  it("maps steps onto x and values onto inverted y", () => {
    const model = metricChartModel({ name: "m", values: [0, 1, 0.5] }, 106, 56, 3);
    expect(model.points).toHaveLength(3);
    expect(model.points[0].x).toBe(3);
    expect(model.points[2].x).toBe(103);
    expect(model.points[1].y).toBe(3); // max value at the top
    expect(model.points[0].y).toBe(53); // min value at the bottom
    expect(model.points.map((p) => p.step)).toEqual([0, 1, 2]);
  });

  it("survives flat series", () => {
    const model = metricChartModel({ name: "m", values: [2, 2] }, 100, 50);
    expect(model.points.every((p) => Number.isFinite(p.y))).toBe(true);
  });

  it("picks the nearest point for a click x", () => {
    const model = metricChartModel({ name: "m", values: [0, 1, 2, 3] }, 106, 56, 3);
    expect(nearestChartPoint(model, model.points[2].x + 1)?.step).toBe(2);
    expect(nearestChartPoint(model, -100)?.step).toBe(0);
  });
});

describe("projectionModel", () => {
  it("keeps step order and scales into the viewport", () => {
    const model = projectionModel(
      { coords: [[0, 0], [1, 1], [2, 0]], explained_variance: [0.9, 0.1] },
      120, 120, 10);
    expect(model.points.map((p) => p.step)).toEqual([0, 1, 2]);
    expect(model.points[0].x).toBe(10);
    expect(model.points[2].x).toBe(110);
    expect(model.explained).toEqual([0.9, 0.1]);
  });

  it("collinear input stays collinear after scaling", () => {
    const model = projectionModel(
      { coords: [[0, 0], [1, 0], [2, 0]], explained_variance: [1, 0] },
      100, 100);
    const ys = model.points.map((p) => p.y);
    expect(new Set(ys).size).toBe(1);
  });
});
