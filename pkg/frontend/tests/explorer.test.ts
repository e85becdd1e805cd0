// Controller driven against a live fixture HTTP server that speaks the
// trajectory-service API. The renderer is a recording fake, so the slider,
// metric-click, and comparison flows are exercised end to end without a
// browser.

import { AddressInfo } from "node:net";
import http from "node:http";
import { afterAll, beforeAll, beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ComparisonRender, Explorer, Renderer } from "../src/controller.js";
import { MetricsPayload, StepPayload, ViewState } from "../src/types.js";
import { ChartModel, HeatmapModel, ProjectionModel } from "../src/views.js";

// Fixture data: a 3-step masked decode over 4 positions (mask id 9) and a
// 4-step continuous run.
const MGM_STEPS: StepPayload[] = [
  { step: 0, state: [9, 9, 9, 9], mask: [1, 1, 1, 1] },
  { step: 1, state: [2, 9, 1, 9], mask: [0, 1, 0, 1], confidence: [0.9, 0.2, 0.8, 0.1] },
  { step: 2, state: [2, 0, 1, 3], mask: [0, 0, 0, 0], confidence: [1, 0.7, 1, 0.9] },
];
const FLOW_STEPS: StepPayload[] = [0, 1, 2, 3].map((k) => ({
  step: k,
  state: [1 - k / 3, 2 - k, 0.5 * k],
}));
const MGM_METRICS: MetricsPayload = {
  series: [
    { name: "masked_fraction", values: [1, 0.5, 0] },
    { name: "mean_chosen_confidence", values: [0, 0.5, 0.9] },
  ],
};

const STORE: Record<string, { kind: string; steps: StepPayload[]; metrics: MetricsPayload }> = {
  "run-mgm": { kind: "mgm", steps: MGM_STEPS, metrics: MGM_METRICS },
  "run-flow": {
    kind: "flow",
    steps: FLOW_STEPS,
    metrics: { series: [{ name: "state_l2_norm", values: [2.29, 1.53, 1.25, 1.8] }] },
  },
};

function fixtureServer(): http.Server {
  return http.createServer((req, res) => {
    const send = (code: number, body: unknown) => {
      res.writeHead(code, { "content-type": "application/json" });
      res.end(JSON.stringify(body));
    };
    const url = req.url ?? "";
    if (url === "/api/trajectories") {
      return send(200, Object.entries(STORE).map(([id, t]) => ({
        id, kind: t.kind, steps: t.steps.length, created_at: null,
      })));
    }
    const stepMatch = url.match(/^\/api\/trajectories\/([^/]+)\/steps\/(\d+)$/);
    if (stepMatch) {
      const t = STORE[decodeURIComponent(stepMatch[1])];
      const k = Number(stepMatch[2]);
      if (!t || k >= t.steps.length) return send(404, { error: "no such step" });
      return send(200, t.steps[k]);
    }
    const metricsMatch = url.match(/^\/api\/trajectories\/([^/]+)\/metrics$/);
    if (metricsMatch) {
      const t = STORE[decodeURIComponent(metricsMatch[1])];
      return t ? send(200, t.metrics) : send(404, { error: "missing" });
    }
    const projMatch = url.match(/^\/api\/trajectories\/([^/]+)\/projection$/);
    if (projMatch) {
      const t = STORE[decodeURIComponent(projMatch[1])];
      if (!t) return send(404, { error: "missing" });
      return send(200, {
        coords: t.steps.map((_, k) => [k * 1.0, (k % 2) * 0.5]),
        explained_variance: [0.8, 0.2],
      });
    }
    send(404, { error: `no route ${url}` });
  });
}

class RecordingRenderer implements Renderer {
  stepViews: Array<{ model: HeatmapModel | null; step: number }> = [];
  metricCalls: Array<{ charts: ChartModel[]; step: number }> = [];
  projections: Array<ProjectionModel | null> = [];
  comparisons: Array<ComparisonRender | null> = [];
  errors: Array<string | null> = [];
  urls: string[] = [];

  renderTrajectoryList(_state: ViewState): void {}
  renderStepView(model: HeatmapModel | null, state: ViewState): void {
    this.stepViews.push({ model, step: state.step });
  }
  renderMetrics(charts: ChartModel[], state: ViewState): void {
    this.metricCalls.push({ charts, step: state.step });
  }
  renderProjection(model: ProjectionModel | null, _state: ViewState): void {
    this.projections.push(model);
  }
  renderComparison(result: ComparisonRender | null, _state: ViewState): void {
    this.comparisons.push(result);
  }
  renderError(message: string | null): void {
    this.errors.push(message);
  }
  renderUrl(query: string): void {
    this.urls.push(query);
  }

  lastStepView() {
    return this.stepViews[this.stepViews.length - 1];
  }
}

let server: http.Server;
let base: string;

beforeAll(async () => {
  server = fixtureServer();
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  base = `http://127.0.0.1:${(server.address() as AddressInfo).port}`;
});

afterAll(async () => {
  await new Promise((resolve) => server.close(resolve));
});

let renderer: RecordingRenderer;
let explorer: Explorer;

beforeEach(async () => {
  renderer = new RecordingRenderer();
  explorer = new Explorer(new ApiClient(base), renderer);
  await explorer.init("");
});

describe("startup", () => {
  it("loads the trajectory listing from the service", () => {
    expect(explorer.state.trajectories.map((t) => t.id)).toEqual([
      "run-mgm", "run-flow",
    ]);
    expect(renderer.errors.at(-1)).toBeNull();
  });
});

describe("step view", () => {
  it("selecting a trajectory shows its first step fully masked", async () => {
    await explorer.dispatch({ type: "select-trajectory", id: "run-mgm" });
    const view = renderer.lastStepView();
    expect(view.step).toBe(0);
    expect(view.model?.maskedFraction).toBe(1);
  });

  it("a slider change updates the step view to the served snapshot", async () => {
    await explorer.dispatch({ type: "select-trajectory", id: "run-mgm" });
    await explorer.dispatch({ type: "set-step", step: 1 }); // slider input event
    const view = renderer.lastStepView();
    expect(view.step).toBe(1);
    expect(view.model?.cells.map((c) => c.value)).toEqual([2, 9, 1, 9]);
    expect(view.model?.cells.map((c) => c.masked)).toEqual([false, true, false, true]);
    expect(view.model?.maskedFraction).toBe(0.5);
  });

  it("the final decode step renders unmasked", async () => {
    await explorer.dispatch({ type: "select-trajectory", id: "run-mgm" });
    await explorer.dispatch({ type: "set-step", step: 2 });
    expect(renderer.lastStepView().model?.maskedFraction).toBe(0);
  });

  it("continuous states render the served floats exactly", async () => {
    await explorer.dispatch({ type: "select-trajectory", id: "run-flow" });
    await explorer.dispatch({ type: "set-step", step: 3 });
    expect(renderer.lastStepView().model?.cells.map((c) => c.value))
      .toEqual(FLOW_STEPS[3].state);
  });
});

describe("metric view", () => {
  it("serves one chart per metric with one point per step", async () => {
    await explorer.dispatch({ type: "select-trajectory", id: "run-mgm" });
    const { charts } = renderer.metricCalls.at(-1)!;
    expect(charts.map((c) => c.name)).toEqual([
      "masked_fraction", "mean_chosen_confidence",
    ]);
    expect(charts[0].points).toHaveLength(3);
  });

  it("clicking a metric point syncs the step view to that step", async () => {
    await explorer.dispatch({ type: "select-trajectory", id: "run-mgm" });
    const chart = renderer.metricCalls.at(-1)!.charts[0];
    const picked = chart.points[2]; // what the chart click handler resolves
    await explorer.dispatch({ type: "set-step", step: picked.step });
    const view = renderer.lastStepView();
    expect(view.step).toBe(2);
    expect(view.model?.maskedFraction).toBe(0);
    // the re-rendered charts mark the new current step
    expect(renderer.metricCalls.at(-1)!.step).toBe(2);
  });
});

describe("projection view", () => {
  it("renders one ordered point per step", async () => {
    await explorer.dispatch({ type: "select-trajectory", id: "run-flow" });
    const model = renderer.projections.at(-1)!;
    expect(model.points.map((p) => p.step)).toEqual([0, 1, 2, 3]);
  });
});

describe("comparison view", () => {
  it("identical selections produce an all-zero difference layer", async () => {
    await explorer.dispatch({ type: "set-mode", mode: "compare" });
    await explorer.dispatch({
      type: "set-comparison-slot", slot: 0,
      selection: { trajectoryId: "run-mgm", step: 1 },
    });
    await explorer.dispatch({
      type: "set-comparison-slot", slot: 1,
      selection: { trajectoryId: "run-mgm", step: 1 },
    });
    const result = renderer.comparisons.at(-1)!;
    expect(result.error).toBeNull();
    expect(result.diff?.allZero).toBe(true);
    expect(result.diff?.cells.every((c) => c.delta === 0)).toBe(true);
  });

  it("adjacent decode steps highlight exactly the newly unmasked cells", async () => {
    await explorer.dispatch({ type: "set-mode", mode: "compare" });
    await explorer.dispatch({
      type: "set-comparison-slot", slot: 0,
      selection: { trajectoryId: "run-mgm", step: 0 },
    });
    await explorer.dispatch({
      type: "set-comparison-slot", slot: 1,
      selection: { trajectoryId: "run-mgm", step: 1 },
    });
    const diff = renderer.comparisons.at(-1)!.diff!;
    expect(diff.cells.filter((c) => c.newlyUnmasked).map((c) => c.index))
      .toEqual([0, 2]);
  });

  it("shape mismatch surfaces a notice instead of a layer", async () => {
    await explorer.dispatch({ type: "set-mode", mode: "compare" });
    await explorer.dispatch({
      type: "set-comparison-slot", slot: 0,
      selection: { trajectoryId: "run-mgm", step: 0 },
    });
    await explorer.dispatch({
      type: "set-comparison-slot", slot: 1,
      selection: { trajectoryId: "run-flow", step: 0 },
    });
    const result = renderer.comparisons.at(-1)!;
    expect(result.diff).toBeNull();
    expect(result.error).toMatch(/shape mismatch/);
  });
});

describe("failure handling", () => {
  it("bad endpoints raise the error banner", async () => {
    const broken = new Explorer(new ApiClient(`${base}/bogus`), new RecordingRenderer());
    const rec = new RecordingRenderer();
    const explorer2 = new Explorer(new ApiClient(`${base}/bogus`), rec);
    await explorer2.init("");
    expect(rec.errors.at(-1)).toBeTruthy();
    void broken;
  });

  it("URL state restores trajectory, step, and mode through init", async () => {
    const rec = new RecordingRenderer();
    const fresh = new Explorer(new ApiClient(base), rec);
    await fresh.init("traj=run-mgm&step=2&mode=compare&metric=masked_fraction");
    expect(fresh.state.selectedId).toBe("run-mgm");
    expect(fresh.state.step).toBe(2);
    expect(fresh.state.mode).toBe("compare");
    expect(fresh.state.activeMetric).toBe("masked_fraction");
    expect(rec.lastStepView().model?.maskedFraction).toBe(0);
  });
});
